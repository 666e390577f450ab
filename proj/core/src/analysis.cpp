#include "cpsec/analysis.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <unordered_map>

namespace cpsec {

AttackSurface attack_surface(const SystemTopology& topology, const MatchMap& matches, const SurfacePolicy& policy) {
  AttackSurface surface;
  for (const auto& node : topology.nodes) {
    if (!node.entry_point) continue;
    const auto& evidence = matches.node(node.id);
    const bool at_entry = std::any_of(evidence.begin(), evidence.end(), [&](const Match& m) {
      return policy.entry_keys.empty() || policy.entry_keys.contains(m.key);
    });
    if (at_entry) surface.node_ids.insert(node.id);
  }
  return surface;
}

namespace {

struct OutEdge {
  const ChannelEdge* edge;
  const std::string* head;
};

class ChainSearch {
 public:
  ChainSearch(const SystemTopology& topology, const MatchMap& matches, const std::string& target,
              const ChainLimits& limits, std::stop_token stop)
      : matches_(matches), target_(target), limits_(limits), stop_(std::move(stop)) {
    for (const auto& edge : topology.edges) {
      if (matches.edge(edge.id).empty()) continue;
      if (matches.node(edge.source).empty() || matches.node(edge.target).empty()) continue;
      out_[edge.source].push_back({&edge, &edge.target});
    }
    for (auto& [node, list] : out_) {
      std::sort(list.begin(), list.end(), [](const OutEdge& a, const OutEdge& b) {
        return std::tie(*a.head, a.edge->id) < std::tie(*b.head, b.edge->id);
      });
    }
  }

  void run_from(const std::string& start, ChainResult& result) {
    if (matches_.node(start).empty()) return;
    nodes_ = {&start};
    edges_.clear();
    on_path_ = {start};
    descend(result);
  }

 private:
  // Returns false once enumeration must stop (limit or cancellation).
  bool descend(ChainResult& result) {
    if (stop_.stop_requested()) {
      result.cancelled = true;
      return false;
    }
    const std::string& tail = *nodes_.back();
    if (tail == target_) {
      if (result.chains.size() == limits_.max_chains) {
        result.truncated = true;
        return false;
      }
      result.chains.push_back(materialize());
      return true;  // a simple path cannot revisit the target
    }
    auto it = out_.find(tail);
    if (it == out_.end()) return true;
    for (const auto& step : it->second) {
      if (on_path_.contains(*step.head)) continue;
      if (edges_.size() == limits_.max_depth) {
        result.truncated = true;
        return true;
      }
      nodes_.push_back(step.head);
      edges_.push_back(step.edge);
      on_path_.insert(*step.head);
      const bool keep_going = descend(result);
      on_path_.erase(*step.head);
      edges_.pop_back();
      nodes_.pop_back();
      if (!keep_going) return false;
    }
    return true;
  }

  ExploitChain materialize() const {
    ExploitChain chain;
    for (const auto* n : nodes_) {
      chain.nodes.push_back(*n);
      chain.node_evidence.push_back(matches_.node_ids(*n));
    }
    for (const auto* e : edges_) {
      chain.edges.push_back(e->id);
      chain.edge_evidence.push_back(matches_.edge_ids(e->id));
    }
    return chain;
  }

  const MatchMap& matches_;
  const std::string& target_;
  ChainLimits limits_;
  std::stop_token stop_;
  std::unordered_map<std::string, std::vector<OutEdge>> out_;
  std::vector<const std::string*> nodes_;
  std::vector<const ChannelEdge*> edges_;
  std::set<std::string> on_path_;
};

}  // namespace

ChainResult exploit_chains(const SystemTopology& topology, const MatchMap& matches, const AttackSurface& surface,
                           const std::string& target, const ChainLimits& limits, std::stop_token stop) {
  if (!topology.find_node(target)) throw NotFoundError(target);
  if (limits.max_depth == 0 || limits.max_chains == 0)
    throw InvalidOperation("exploit chain limits must be positive");
  ChainResult result;
  if (stop.stop_requested()) {
    result.cancelled = true;
    return result;
  }
  if (matches.node(target).empty()) return result;
  ChainSearch search(topology, matches, target, limits, std::move(stop));
  // surface.node_ids is ordered, so chains come out lexicographically.
  for (const auto& start : surface.node_ids) {
    if (!topology.find_node(start)) continue;
    search.run_from(start, result);
    if (result.cancelled || (result.truncated && result.chains.size() == limits.max_chains)) break;
  }
  return result;
}

bool verify_chain(const ExploitChain& chain, const SystemTopology& topology, const MatchMap& matches,
                  const AttackSurface& surface) {
  if (chain.nodes.empty() || chain.edges.size() + 1 != chain.nodes.size()) return false;
  if (chain.node_evidence.size() != chain.nodes.size() || chain.edge_evidence.size() != chain.edges.size())
    return false;
  if (!surface.node_ids.contains(chain.nodes.front())) return false;
  std::set<std::string> seen;
  for (std::size_t i = 0; i < chain.nodes.size(); ++i) {
    if (!seen.insert(chain.nodes[i]).second) return false;
    if (chain.node_evidence[i].empty() || chain.node_evidence[i] != matches.node_ids(chain.nodes[i])) return false;
  }
  for (std::size_t i = 0; i < chain.edges.size(); ++i) {
    const auto* edge = topology.find_edge(chain.edges[i]);
    if (!edge || edge->source != chain.nodes[i] || edge->target != chain.nodes[i + 1]) return false;
    if (chain.edge_evidence[i].empty() || chain.edge_evidence[i] != matches.edge_ids(edge->id)) return false;
  }
  return true;
}

ViolationTrace violation_trace(const Specification& spec, const std::string& origin) {
  if (!spec.find_node(origin)) throw NotFoundError(origin);
  std::map<std::string, std::vector<const SpecEdge*>> outgoing, incoming;
  for (const auto& edge : spec.edges) {
    outgoing[edge.parent].push_back(&edge);
    incoming[edge.child].push_back(&edge);
  }

  ViolationTrace trace;
  trace.origin = origin;
  auto sweep = [&](auto& adjacency, bool forward, std::set<std::string>& reached, std::set<SpecEdge>& traversed) {
    std::deque<std::string> frontier{origin};
    reached.insert(origin);
    while (!frontier.empty()) {
      const std::string id = frontier.front();
      frontier.pop_front();
      auto it = adjacency.find(id);
      if (it == adjacency.end()) continue;
      for (const auto* edge : it->second) {
        traversed.insert(*edge);
        const std::string& next = forward ? edge->child : edge->parent;
        if (reached.insert(next).second) frontier.push_back(next);
      }
    }
  };
  sweep(incoming, false, trace.upward, trace.upward_edges);
  sweep(outgoing, true, trace.downward, trace.downward_edges);
  return trace;
}

ProjectionOverlay project_bucket(const SystemTopology& topology, const MatchMap& matches,
                                 std::span<const std::string> attack_ids) {
  ProjectionOverlay overlay;
  for (const auto& node : topology.nodes) {
    const auto ids = matches.node_ids(node.id);
    for (const auto& attack : attack_ids)
      if (ids.contains(attack)) overlay.links.emplace(attack, node.id);
  }
  return overlay;
}

SystemTopology apply_attribute_edit(const SystemTopology& topology, const AttributeEdit& edit) {
  SystemTopology edited = topology;
  AttributeMap* attributes = nullptr;
  for (auto& node : edited.nodes)
    if (node.id == edit.element) attributes = &node.attributes;
  if (!attributes)
    for (auto& edge : edited.edges)
      if (edge.id == edit.element) attributes = &edge.attributes;
  if (!attributes) throw NotFoundError(edit.element);
  if (edit.key.empty()) throw InvalidOperation("attribute key must not be empty");

  if (edit.action == AttributeEdit::Action::add) {
    if (!attributes->emplace(edit.key, edit.value).second)
      throw InvalidOperation("\"" + edit.element + "\" already has attribute \"" + edit.key + "\"");
    return edited;
  }
  auto it = attributes->find(edit.key);
  if (it == attributes->end() || it->second != edit.value)
    throw InvalidOperation("\"" + edit.element + "\" has no attribute " + edit.key + "=" + edit.value);
  attributes->erase(it);
  return edited;
}

}  // namespace cpsec
