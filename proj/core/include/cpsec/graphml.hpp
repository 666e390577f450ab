#pragma once

// GraphML convention (keys resolved through <key attr.name>, falling back to
// the key id when undeclared):
//
//   node  name         display name (defaults to the node id)
//   node  attrs        flattened attribute map "k=v;k=v", '\' escapes ; = and \ itself
//   node  entry_point  "true" / "false" (default false)
//   edge  attrs        same encoding as node attrs
//
//   specification nodes additionally use: label, level, description, component_id
//
// Unknown keys are ignored and reported as warnings.

#include <string>
#include <string_view>

#include "cpsec/diagnostics.hpp"
#include "cpsec/graph.hpp"

namespace cpsec {

/// Throws ParseError on malformed XML and ValidationError when the resulting
/// topology violates an invariant (duplicate id, dangling endpoint, ...).
Parsed<SystemTopology> parse_topology_graphml(std::string_view document);

/// As parse_topology_graphml; additionally rejects missing/unknown levels,
/// upward or band-skipping edges and cycles.
Parsed<Specification> parse_spec_graphml(std::string_view document);

std::string serialize_graphml(const SystemTopology& topology);
std::string serialize_graphml(const Specification& spec);

std::string encode_attributes(const AttributeMap& attributes);
/// Throws ParseError on an entry without '=' or a duplicated key.
AttributeMap decode_attributes(std::string_view encoded);

}  // namespace cpsec
