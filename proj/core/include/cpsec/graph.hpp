#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cpsec/diagnostics.hpp"

namespace cpsec {

/// Design attributes of a component or channel, e.g. "protocol" -> "ZigBee".
using AttributeMap = std::map<std::string, std::string>;

struct ComponentNode {
  std::string id;
  std::string name;
  AttributeMap attributes;
  bool entry_point = false;  // externally reachable interface

  bool operator==(const ComponentNode&) const = default;
};

/// A directed dependence between two components. Edge ids share the element
/// namespace with node ids so an edit can address either by id alone.
struct ChannelEdge {
  std::string id;
  std::string source;
  std::string target;
  AttributeMap attributes;

  bool operator==(const ChannelEdge&) const = default;
};

/// The system topology: always directed, nodes and edges in document order.
struct SystemTopology {
  std::vector<ComponentNode> nodes;
  std::vector<ChannelEdge> edges;

  const ComponentNode* find_node(std::string_view id) const;
  const ChannelEdge* find_edge(std::string_view id) const;
  bool has_element(std::string_view id) const { return find_node(id) || find_edge(id); }

  bool operator==(const SystemTopology&) const = default;
};

enum class SpecLevel { loss, hazard, constraint, control_action, component_ref };

/// Mission (losses, hazards, constraints) above functional (control actions)
/// above structural (references to topology components).
enum class Band { mission = 0, functional = 1, structural = 2 };

Band band_of(SpecLevel level);
std::string_view to_string(SpecLevel level);
std::string_view to_string(Band band);
std::optional<SpecLevel> parse_spec_level(std::string_view text);

struct SpecNode {
  std::string id;
  std::string label;
  SpecLevel level = SpecLevel::loss;
  std::string description;
  std::optional<std::string> component_id;  // set iff level == component_ref

  bool operator==(const SpecNode&) const = default;
};

struct SpecEdge {
  std::string parent;
  std::string child;

  auto operator<=>(const SpecEdge&) const = default;
};

struct Specification {
  std::vector<SpecNode> nodes;
  std::vector<SpecEdge> edges;

  const SpecNode* find_node(std::string_view id) const;

  bool operator==(const Specification&) const = default;
};

/// Checks every topology invariant. Empty result iff the topology is valid.
std::vector<Diagnostic> validate(const SystemTopology& topology);

/// Checks specification invariants: unique ids, level/component_id
/// consistency, band monotonicity and acyclicity. component_ref targets are
/// resolved only when a companion topology is supplied.
std::vector<Diagnostic> validate(const Specification& spec,
                                 const SystemTopology* companion = nullptr);

}  // namespace cpsec
