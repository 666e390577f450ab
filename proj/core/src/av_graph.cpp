#include "cpsec/av_graph.hpp"

#include <algorithm>

namespace cpsec {

std::string_view to_string(VertexKind kind) {
  switch (kind) {
    case VertexKind::capec: return "capec";
    case VertexKind::cwe: return "cwe";
    case VertexKind::cve: return "cve";
  }
  return "capec";
}

VertexKind kind_of(Source source) {
  switch (source) {
    case Source::capec: return VertexKind::capec;
    case Source::cwe: return VertexKind::cwe;
    case Source::cve: return VertexKind::cve;
  }
  return VertexKind::cve;
}

std::set<std::string> AvGraph::visible_ids() const {
  std::set<std::string> out;
  for (const auto& [id, v] : vertices)
    if (v.visible) out.insert(out.end(), id);
  return out;
}

std::size_t AvGraph::visible_count() const {
  return static_cast<std::size_t>(
      std::count_if(vertices.begin(), vertices.end(), [](const auto& kv) { return kv.second.visible; }));
}

namespace {

UndirectedEdge make_edge(const std::string& a, const std::string& b) {
  return a < b ? UndirectedEdge{a, b} : UndirectedEdge{b, a};
}

/// Restores weights, visibility and the visible edge set after a structural change.
void settle(AvGraph& g) {
  for (auto it = g.consumed.begin(); it != g.consumed.end();) {
    it = it->second.empty() ? g.consumed.erase(it) : std::next(it);
  }
  for (auto& [id, v] : g.vertices) {
    if (v.kind == VertexKind::cwe) {
      auto c = g.consumed.find(id);
      v.weight = c == g.consumed.end() ? 0 : c->second.size();
    } else if (v.kind == VertexKind::cve) {
      v.visible = false;
    }
  }
  for (const auto& cwe : g.expanded) {
    auto c = g.consumed.find(cwe);
    if (c == g.consumed.end()) continue;
    for (const auto& cve : c->second) g.vertices.at(cve).visible = true;
  }
  for (auto it = g.relations.begin(); it != g.relations.end();) {
    it = g.vertices.contains(it->first) && g.vertices.contains(it->second) ? std::next(it) : g.relations.erase(it);
  }
  g.edges.clear();
  for (const auto& e : g.relations)
    if (g.vertices.at(e.first).visible && g.vertices.at(e.second).visible) g.edges.insert(e);
}

}  // namespace

AvGraph build_av_graph(const MatchMap& matches, const Corpus& corpus) {
  AvGraph g;
  const std::string unmapped(kUnmappedCwe);
  for (const auto& id : matches.all_ids()) {
    const auto* entry = corpus.find(id);
    if (!entry) continue;
    g.vertices.emplace(id, AvVertex{id, kind_of(entry->source), 0, entry->source != Source::cve});
    if (entry->source != Source::cve) continue;

    bool mapped = false;
    for (const auto& r : entry->relations) {
      if (r.kind != RelationKind::weakness_of) continue;
      const auto* cwe = corpus.find(r.target);
      if (!cwe || cwe->source != Source::cwe) continue;
      mapped = true;
      g.consumed[r.target].insert(id);
      g.vertices.emplace(r.target, AvVertex{r.target, VertexKind::cwe, 0, true});
    }
    if (!mapped) {
      g.consumed[unmapped].insert(id);
      g.vertices.emplace(unmapped, AvVertex{unmapped, VertexKind::cwe, 0, true});
    }
  }
  for (const auto& [id, v] : g.vertices) {
    if (const auto* entry = corpus.find(id)) {
      for (const auto& r : entry->relations)
        if (g.vertices.contains(r.target)) g.relations.insert(make_edge(id, r.target));
    }
  }
  for (const auto& [cwe, cves] : g.consumed)
    for (const auto& cve : cves) g.relations.insert(make_edge(cwe, cve));
  settle(g);
  return g;
}

AvGraph expand_vertex(AvGraph graph, const std::string& cwe_id) {
  auto it = graph.vertices.find(cwe_id);
  if (it == graph.vertices.end()) throw NotFoundError(cwe_id);
  if (it->second.kind != VertexKind::cwe) throw InvalidOperation(cwe_id + " is not a CWE vertex");
  if (it->second.weight == 0) return graph;
  graph.expanded.insert(cwe_id);
  settle(graph);
  return graph;
}

AvGraph delete_vertices(AvGraph graph, std::span<const std::string> ids) {
  for (const auto& id : ids)
    if (!graph.vertices.contains(id)) throw NotFoundError(id);

  auto drop_cve = [&graph](const std::string& cve) {
    graph.vertices.erase(cve);
    for (auto& [cwe, cves] : graph.consumed) cves.erase(cve);
  };
  for (const auto& id : ids) {
    auto it = graph.vertices.find(id);
    graph.deleted.insert(id);
    if (it == graph.vertices.end()) continue;  // already taken by an earlier CWE in this batch
    switch (it->second.kind) {
      case VertexKind::capec:
        graph.vertices.erase(it);
        break;
      case VertexKind::cve:
        drop_cve(id);
        break;
      case VertexKind::cwe: {
        std::set<std::string> cves;
        if (auto c = graph.consumed.find(id); c != graph.consumed.end()) cves = c->second;
        for (const auto& cve : cves) drop_cve(cve);
        graph.consumed.erase(id);
        graph.expanded.erase(id);
        graph.vertices.erase(id);
        break;
      }
    }
  }
  settle(graph);
  return graph;
}

AvGraph rebuild_av_graph(const MatchMap& matches, const Corpus& corpus, const std::set<std::string>& deleted,
                         const std::set<std::string>& expanded) {
  AvGraph g = build_av_graph(matches, corpus);
  std::vector<std::string> present;
  for (const auto& id : deleted)
    if (g.vertices.contains(id)) present.push_back(id);
  g = delete_vertices(std::move(g), present);
  g.deleted = deleted;
  for (const auto& id : expanded) {
    auto it = g.vertices.find(id);
    if (it != g.vertices.end() && it->second.kind == VertexKind::cwe) g = expand_vertex(std::move(g), id);
  }
  return g;
}

std::string_view to_string(QueryField field) {
  switch (field) {
    case QueryField::id: return "id";
    case QueryField::name: return "name";
    case QueryField::description: return "description";
    case QueryField::components: return "components";
  }
  return "id";
}

std::optional<QueryField> parse_query_field(std::string_view text) {
  for (auto f : {QueryField::id, QueryField::name, QueryField::description, QueryField::components})
    if (to_string(f) == text) return f;
  return std::nullopt;
}

Query::Query(std::string pattern, std::set<QueryField> fields, std::optional<std::set<std::string>> component_filter,
             bool bucket_only)
    : pattern_(std::move(pattern)),
      fields_(std::move(fields)),
      component_filter_(std::move(component_filter)),
      bucket_only_(bucket_only) {
  if (fields_.empty())
    fields_ = {QueryField::id, QueryField::name, QueryField::description, QueryField::components};
  try {
    regex_ = std::regex(pattern_, std::regex::ECMAScript | std::regex::icase);
  } catch (const std::regex_error& e) {
    throw InvalidOperation("invalid regular expression \"" + pattern_ + "\": " + e.what());
  }
}

Query Query::with_component_filter(std::optional<std::set<std::string>> filter) const {
  Query q = *this;
  q.component_filter_ = std::move(filter);
  return q;
}

Query Query::with_bucket_only(bool value) const {
  Query q = *this;
  q.bucket_only_ = value;
  return q;
}

bool Query::matches_text(std::string_view text) const {
  if (pattern_.empty()) return true;
  return std::regex_search(text.begin(), text.end(), regex_);
}

std::pair<std::string, std::string> describe_vertex(std::string_view native_id, const Corpus& corpus) {
  if (native_id == kUnmappedCwe) return {"Unmapped vulnerabilities", "Matched CVE entries with no CWE mapping"};
  if (const auto* entry = corpus.find(native_id)) return {entry->name, entry->description};
  return {std::string(native_id), {}};
}

std::set<std::string> filter_av(const AvGraph& graph, const Query& query, const MatchMap& matches,
                                const Bucket& bucket, const Corpus& corpus) {
  std::set<std::string> candidates = graph.visible_ids();
  auto keep_only = [&candidates](const std::set<std::string>& allowed) {
    std::set<std::string> kept;
    std::set_intersection(candidates.begin(), candidates.end(), allowed.begin(), allowed.end(),
                          std::inserter(kept, kept.end()));
    candidates.swap(kept);
  };
  if (const auto& components = query.component_filter()) {
    std::set<std::string> allowed;
    for (const auto& node : *components) allowed.merge(matches.node_ids(node));
    keep_only(allowed);
  }
  if (query.bucket_only()) {
    auto ids = bucket.ids();
    keep_only(std::set<std::string>(ids.begin(), ids.end()));
  }
  if (query.pattern().empty() || candidates.empty()) return candidates;

  std::map<std::string, std::vector<std::string>> components_of;
  if (query.fields().contains(QueryField::components)) {
    for (const auto& [node, set] : matches.node_matches)
      for (const auto& m : set) {
        auto& list = components_of[m.native_id];
        if (list.empty() || list.back() != node) list.push_back(node);
      }
  }
  std::set<std::string> out;
  for (const auto& id : candidates) {
    bool hit = false;
    for (auto field : query.fields()) {
      switch (field) {
        case QueryField::id:
          hit = query.matches_text(id);
          break;
        case QueryField::name:
          hit = query.matches_text(describe_vertex(id, corpus).first);
          break;
        case QueryField::description:
          hit = query.matches_text(describe_vertex(id, corpus).second);
          break;
        case QueryField::components: {
          auto it = components_of.find(id);
          if (it != components_of.end())
            hit = std::any_of(it->second.begin(), it->second.end(),
                              [&](const std::string& n) { return query.matches_text(n); });
          break;
        }
      }
      if (hit) break;
    }
    if (hit) out.insert(out.end(), id);
  }
  return out;
}

}  // namespace cpsec
