#pragma once

#include <cstddef>
#include <limits>
#include <set>
#include <span>
#include <stop_token>
#include <string>
#include <utility>
#include <vector>

#include "cpsec/graph.hpp"
#include "cpsec/matcher.hpp"

namespace cpsec {

/// Which attribute keys describe a component's externally reachable
/// interface. Only evidence fired by these keys puts an entry point on the
/// attack surface; an empty set accepts evidence from any key.
struct SurfacePolicy {
  std::set<std::string> entry_keys{"interface", "protocol"};

  bool operator==(const SurfacePolicy&) const = default;
};

struct AttackSurface {
  std::set<std::string> node_ids;

  bool operator==(const AttackSurface&) const = default;
};

AttackSurface attack_surface(const SystemTopology& topology, const MatchMap& matches,
                             const SurfacePolicy& policy = {});

struct ChainLimits {
  static constexpr std::size_t unlimited = std::numeric_limits<std::size_t>::max();

  std::size_t max_depth = 10;  // edges per chain
  std::size_t max_chains = 1000;
};

struct ExploitChain {
  std::vector<std::string> nodes;
  std::vector<std::string> edges;  // edges[i] joins nodes[i] -> nodes[i + 1]
  std::vector<std::set<std::string>> node_evidence;
  std::vector<std::set<std::string>> edge_evidence;

  bool operator==(const ExploitChain&) const = default;
};

struct ChainResult {
  std::vector<ExploitChain> chains;  // ordered by (node ids, edge ids)
  bool truncated = false;            // a limit cut the enumeration short
  bool cancelled = false;

  bool operator==(const ChainResult&) const = default;
};

/// Enumerates every simple directed path from a surface node to `target` in
/// which each node and each edge carries evidence. Throws NotFoundError for an
/// unknown target. The stop token is polled between expansions.
ChainResult exploit_chains(const SystemTopology& topology, const MatchMap& matches, const AttackSurface& surface,
                           const std::string& target, const ChainLimits& limits = {},
                           std::stop_token stop = {});

/// True when every element of `chain` really carries the recorded evidence
/// and the chain is a simple surface-to-target path of `topology`.
bool verify_chain(const ExploitChain& chain, const SystemTopology& topology, const MatchMap& matches,
                  const AttackSurface& surface);

struct ViolationTrace {
  std::string origin;
  std::set<std::string> upward;    // reachable against edge direction, origin included
  std::set<std::string> downward;  // reachable along edge direction, origin included
  std::set<SpecEdge> upward_edges;
  std::set<SpecEdge> downward_edges;

  bool operator==(const ViolationTrace&) const = default;
};

ViolationTrace violation_trace(const Specification& spec, const std::string& origin);

struct ProjectionOverlay {
  std::set<std::pair<std::string, std::string>> links;  // (attack native_id, topology node id)

  bool operator==(const ProjectionOverlay&) const = default;
};

ProjectionOverlay project_bucket(const SystemTopology& topology, const MatchMap& matches,
                                 std::span<const std::string> attack_ids);

struct AttributeEdit {
  enum class Action { add, remove };

  std::string element;  // node or edge id
  Action action = Action::add;
  std::string key;
  std::string value;

  bool operator==(const AttributeEdit&) const = default;
};

/// Returns the edited copy; `topology` itself is untouched. Throws
/// NotFoundError for an unknown element and InvalidOperation when adding an
/// existing key or removing a pair that is not present.
SystemTopology apply_attribute_edit(const SystemTopology& topology, const AttributeEdit& edit);

}  // namespace cpsec
