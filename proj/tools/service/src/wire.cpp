#include "cpsec/service/wire.hpp"

namespace cpsec::service {

using nlohmann::json;

nlohmann::json diagnostics_json(const std::vector<Diagnostic>& diagnostics) {
  json out = json::array();
  for (const auto& d : diagnostics) {
    json item = {{"severity", d.severity == Severity::error ? "error" : "warning"},
                 {"code", d.code},
                 {"message", d.message},
                 {"subjects", d.subjects}};
    item["line"] = d.line ? json(*d.line) : json(nullptr);
    out.push_back(std::move(item));
  }
  return out;
}

nlohmann::json topology_json(const SessionSnapshot& s) {
  const auto selected = s.selected(Pane::topology);
  json nodes = json::array();
  for (const auto& n : s.topology.nodes)
    nodes.push_back({{"id", n.id},
                     {"name", n.name},
                     {"attributes", n.attributes},
                     {"entry_point", n.entry_point},
                     {"surface", s.surface.node_ids.contains(n.id)},
                     {"selected", selected.contains(n.id)},
                     {"highlighted", s.highlighted.contains(n.id)}});
  json edges = json::array();
  for (const auto& e : s.topology.edges)
    edges.push_back({{"id", e.id},
                     {"source", e.source},
                     {"target", e.target},
                     {"attributes", e.attributes},
                     {"selected", selected.contains(e.id)}});
  return {{"version", s.version}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

nlohmann::json spec_json(const SessionSnapshot& s) {
  const auto selected = s.selected(Pane::spec);
  json nodes = json::array();
  for (const auto& n : s.spec.nodes) {
    json node = {{"id", n.id},
                 {"label", n.label},
                 {"level", to_string(n.level)},
                 {"band", to_string(band_of(n.level))},
                 {"description", n.description},
                 {"selected", selected.contains(n.id)}};
    node["component_id"] = n.component_id ? json(*n.component_id) : json(nullptr);
    nodes.push_back(std::move(node));
  }
  json edges = json::array();
  for (const auto& e : s.spec.edges) edges.push_back({{"parent", e.parent}, {"child", e.child}});
  return {{"version", s.version}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

nlohmann::json match_set_json(const MatchSet& set) {
  json out = json::array();
  for (const auto& m : set) out.push_back({{"native_id", m.native_id}, {"key", m.key}, {"term", m.term}});
  return out;
}

nlohmann::json matches_json(const SessionSnapshot& s) {
  json nodes = json::object();
  for (const auto& [id, set] : s.matches.node_matches) nodes[id] = match_set_json(set);
  json edges = json::object();
  for (const auto& [id, set] : s.matches.edge_matches) edges[id] = match_set_json(set);
  return {{"version", s.version}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

nlohmann::json av_graph_json(const SessionSnapshot& s, const Corpus& corpus) {
  const auto selected = s.selected(Pane::av);
  json vertices = json::array();
  for (const auto& [id, v] : s.av.vertices) {
    if (!v.visible) continue;
    auto [name, description] = describe_vertex(id, corpus);
    vertices.push_back({{"id", id},
                        {"kind", to_string(v.kind)},
                        {"weight", v.weight},
                        {"name", name},
                        {"expanded", s.av.expanded.contains(id)},
                        {"selected", selected.contains(id)},
                        {"in_bucket", s.bucket.contains(id)}});
  }
  json edges = json::array();
  for (const auto& [a, b] : s.av.edges) edges.push_back({a, b});
  return {{"version", s.version},
          {"vertices", std::move(vertices)},
          {"edges", std::move(edges)},
          {"deleted", strings(s.av.deleted)},
          {"expanded", strings(s.av.expanded)}};
}

nlohmann::json av_view_json(const SessionSnapshot& s) {
  json query = {{"pattern", s.query.pattern()}, {"bucket_only", s.query.bucket_only()}};
  json fields = json::array();
  for (auto f : s.query.fields()) fields.push_back(to_string(f));
  query["fields"] = std::move(fields);
  query["component_filter"] = s.query.component_filter() ? strings(*s.query.component_filter()) : json(nullptr);
  const auto effective = s.effective_component_filter();
  return {{"version", s.version},
          {"ids", strings(s.av_view)},
          {"query", std::move(query)},
          {"effective_component_filter", effective ? strings(*effective) : json(nullptr)}};
}

nlohmann::json positions_json(const SessionSnapshot& s) {
  auto pane = [](const Positions& positions) {
    json out = json::object();
    for (const auto& [id, p] : positions) out[id] = {p.x, p.y};
    return out;
  };
  return {{"version", s.version},
          {"topology", pane(s.positions.topology)},
          {"spec", pane(s.positions.spec)},
          {"av", pane(s.positions.av)}};
}

nlohmann::json selection_json(const SessionSnapshot& s) {
  json items = json::array();
  for (const auto& item : s.selection) items.push_back({{"pane", to_string(item.pane)}, {"id", item.id}});
  return {{"version", s.version}, {"items", std::move(items)}, {"highlighted", strings(s.highlighted)}};
}

nlohmann::json edit_log_json(const SessionSnapshot& s) {
  json commands = json::array();
  for (const auto& c : s.log) commands.push_back(json::parse(encode_command(c)));
  return {{"version", s.version}, {"commands", std::move(commands)}};
}

nlohmann::json projection_json(const SessionSnapshot& s) {
  json links = json::array();
  if (s.projection)
    for (const auto& [attack, node] : s.projection->links) links.push_back({attack, node});
  return {{"version", s.version},
          {"active", s.projection.has_value()},
          {"ids", s.projected_ids ? strings(*s.projected_ids) : json::array()},
          {"links", std::move(links)}};
}

nlohmann::json entry_json(const AttackEntry& e) {
  json relations = json::array();
  for (const auto& r : e.relations) relations.push_back({to_string(r.kind), r.target});
  json out = {{"id", e.native_id},
              {"source", to_string(e.source)},
              {"name", e.name},
              {"description", e.description},
              {"relations", std::move(relations)},
              {"extra_text", e.extra_text}};
  out["severity"] = e.severity ? json(*e.severity) : json(nullptr);
  return out;
}

nlohmann::json trace_json(const ViolationTrace& t) {
  auto edges = [](const std::set<SpecEdge>& set) {
    json out = json::array();
    for (const auto& e : set) out.push_back({e.parent, e.child});
    return out;
  };
  return {{"origin", t.origin},
          {"upward", strings(t.upward)},
          {"downward", strings(t.downward)},
          {"upward_edges", edges(t.upward_edges)},
          {"downward_edges", edges(t.downward_edges)}};
}

nlohmann::json chains_json(const std::string& target, const ChainResult& result) {
  json chains = json::array();
  for (const auto& c : result.chains) {
    json node_evidence = json::array();
    for (const auto& ev : c.node_evidence) node_evidence.push_back(strings(ev));
    json edge_evidence = json::array();
    for (const auto& ev : c.edge_evidence) edge_evidence.push_back(strings(ev));
    chains.push_back({{"nodes", c.nodes},
                      {"edges", c.edges},
                      {"node_evidence", std::move(node_evidence)},
                      {"edge_evidence", std::move(edge_evidence)}});
  }
  return {{"target", target},
          {"chains", std::move(chains)},
          {"truncated", result.truncated},
          {"cancelled", result.cancelled}};
}

}  // namespace cpsec::service
