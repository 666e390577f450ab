#include "cpsec/graph.hpp"

#include <algorithm>
#include <deque>
#include <unordered_map>
#include <unordered_set>

namespace cpsec {

const ComponentNode* SystemTopology::find_node(std::string_view id) const {
  auto it = std::find_if(nodes.begin(), nodes.end(), [&](const auto& n) { return n.id == id; });
  return it == nodes.end() ? nullptr : &*it;
}

const ChannelEdge* SystemTopology::find_edge(std::string_view id) const {
  auto it = std::find_if(edges.begin(), edges.end(), [&](const auto& e) { return e.id == id; });
  return it == edges.end() ? nullptr : &*it;
}

const SpecNode* Specification::find_node(std::string_view id) const {
  auto it = std::find_if(nodes.begin(), nodes.end(), [&](const auto& n) { return n.id == id; });
  return it == nodes.end() ? nullptr : &*it;
}

Band band_of(SpecLevel level) {
  switch (level) {
    case SpecLevel::loss:
    case SpecLevel::hazard:
    case SpecLevel::constraint:
      return Band::mission;
    case SpecLevel::control_action:
      return Band::functional;
    case SpecLevel::component_ref:
      return Band::structural;
  }
  return Band::mission;
}

std::string_view to_string(SpecLevel level) {
  switch (level) {
    case SpecLevel::loss: return "loss";
    case SpecLevel::hazard: return "hazard";
    case SpecLevel::constraint: return "constraint";
    case SpecLevel::control_action: return "control_action";
    case SpecLevel::component_ref: return "component_ref";
  }
  return "loss";
}

std::string_view to_string(Band band) {
  switch (band) {
    case Band::mission: return "mission";
    case Band::functional: return "functional";
    case Band::structural: return "structural";
  }
  return "mission";
}

std::optional<SpecLevel> parse_spec_level(std::string_view text) {
  for (auto level : {SpecLevel::loss, SpecLevel::hazard, SpecLevel::constraint,
                     SpecLevel::control_action, SpecLevel::component_ref}) {
    if (to_string(level) == text) return level;
  }
  return std::nullopt;
}

namespace {

Diagnostic error(std::string code, std::string message, std::vector<std::string> subjects) {
  return Diagnostic{Severity::error, std::move(code), std::move(message), std::move(subjects), {}};
}

}  // namespace

std::vector<Diagnostic> validate(const SystemTopology& topology) {
  std::vector<Diagnostic> out;
  std::unordered_map<std::string_view, int> seen;
  for (const auto& node : topology.nodes) {
    if (node.id.empty()) {
      out.push_back(error("empty-id", "node with empty id", {}));
      continue;
    }
    if (seen[node.id]++ == 1)
      out.push_back(error("duplicate-id", "duplicate node id \"" + node.id + "\"", {node.id}));
    for (const auto& [key, value] : node.attributes) {
      if (key.empty())
        out.push_back(error("empty-attribute-key", "node \"" + node.id + "\" has an empty attribute key",
                            {node.id}));
    }
  }
  std::unordered_map<std::string_view, int> edge_seen;
  for (const auto& edge : topology.edges) {
    if (edge.id.empty()) {
      out.push_back(error("empty-id", "edge with empty id", {}));
    } else if (edge_seen[edge.id]++ == 1) {
      out.push_back(error("duplicate-id", "duplicate edge id \"" + edge.id + "\"", {edge.id}));
    } else if (seen.contains(edge.id)) {
      out.push_back(error("duplicate-id", "edge id \"" + edge.id + "\" collides with a node id", {edge.id}));
    }
    for (const auto* endpoint : {&edge.source, &edge.target}) {
      if (!seen.contains(*endpoint))
        out.push_back(error("dangling-endpoint",
                            "edge \"" + edge.id + "\" references missing node \"" + *endpoint + "\"",
                            {edge.id, *endpoint}));
    }
    if (edge.source == edge.target)
      out.push_back(error("self-loop", "edge \"" + edge.id + "\" is a self-loop on \"" + edge.source + "\"",
                          {edge.id, edge.source}));
    for (const auto& [key, value] : edge.attributes) {
      if (key.empty())
        out.push_back(error("empty-attribute-key", "edge \"" + edge.id + "\" has an empty attribute key",
                            {edge.id}));
    }
  }
  return out;
}

std::vector<Diagnostic> validate(const Specification& spec, const SystemTopology* companion) {
  std::vector<Diagnostic> out;
  std::unordered_map<std::string_view, const SpecNode*> by_id;
  for (const auto& node : spec.nodes) {
    if (node.id.empty()) {
      out.push_back(error("empty-id", "specification node with empty id", {}));
      continue;
    }
    if (!by_id.emplace(node.id, &node).second) {
      out.push_back(error("duplicate-id", "duplicate node id \"" + node.id + "\"", {node.id}));
      continue;
    }
    if (node.label.empty())
      out.push_back(error("empty-label", "node \"" + node.id + "\" has an empty label", {node.id}));
    const bool is_ref = node.level == SpecLevel::component_ref;
    if (is_ref && (!node.component_id || node.component_id->empty())) {
      out.push_back(error("missing-component-id",
                          "component_ref \"" + node.id + "\" has no component_id", {node.id}));
    } else if (!is_ref && node.component_id) {
      out.push_back(error("unexpected-component-id",
                          "node \"" + node.id + "\" carries a component_id but is not a component_ref",
                          {node.id}));
    } else if (is_ref && companion && !companion->find_node(*node.component_id)) {
      out.push_back(error("unresolved-component",
                          "component_ref \"" + node.id + "\" names unknown component \"" +
                              *node.component_id + "\"",
                          {node.id, *node.component_id}));
    }
  }

  bool edges_resolve = true;
  for (const auto& edge : spec.edges) {
    auto parent = by_id.find(edge.parent);
    auto child = by_id.find(edge.child);
    if (parent == by_id.end() || child == by_id.end()) {
      const auto& missing = parent == by_id.end() ? edge.parent : edge.child;
      out.push_back(error("dangling-endpoint",
                          "edge " + edge.parent + " -> " + edge.child + " references missing node \"" +
                              missing + "\"",
                          {edge.parent, edge.child}));
      edges_resolve = false;
      continue;
    }
    const Band from = band_of(parent->second->level);
    const Band to = band_of(child->second->level);
    const int step = static_cast<int>(to) - static_cast<int>(from);
    if (step < 0) {
      out.push_back(error("upward-edge",
                          "upward edge " + edge.parent + " (" + std::string(to_string(from)) + ") -> " +
                              edge.child + " (" + std::string(to_string(to)) + ")",
                          {edge.parent, edge.child}));
    } else if (step > 1) {
      out.push_back(error("band-skip",
                          "edge " + edge.parent + " -> " + edge.child + " skips the functional band",
                          {edge.parent, edge.child}));
    } else if (step == 0 && from != Band::mission) {
      out.push_back(error("intra-band-edge",
                          "edge " + edge.parent + " -> " + edge.child + " stays inside the " +
                              std::string(to_string(from)) + " band",
                          {edge.parent, edge.child}));
    }
    if (edge.parent == edge.child)
      out.push_back(error("self-loop", "self-loop on \"" + edge.parent + "\"", {edge.parent}));
  }

  if (edges_resolve && !has_errors(out)) {
    // Kahn's algorithm; whatever survives with nonzero in-degree sits on a cycle.
    std::unordered_map<std::string_view, int> indegree;
    std::unordered_map<std::string_view, std::vector<std::string_view>> children;
    for (const auto& node : spec.nodes) indegree[node.id] = 0;
    for (const auto& edge : spec.edges) {
      ++indegree[edge.child];
      children[edge.parent].push_back(edge.child);
    }
    std::deque<std::string_view> ready;
    for (const auto& [id, deg] : indegree)
      if (deg == 0) ready.push_back(id);
    std::size_t visited = 0;
    while (!ready.empty()) {
      auto id = ready.front();
      ready.pop_front();
      ++visited;
      for (auto child : children[id])
        if (--indegree[child] == 0) ready.push_back(child);
    }
    if (visited != indegree.size()) {
      std::vector<std::string> cyclic;
      for (const auto& [id, deg] : indegree)
        if (deg > 0) cyclic.emplace_back(id);
      std::sort(cyclic.begin(), cyclic.end());
      out.push_back(error("cycle", "specification contains a cycle", std::move(cyclic)));
    }
  }
  return out;
}

}  // namespace cpsec
