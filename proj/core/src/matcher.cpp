#include "cpsec/matcher.hpp"

#include <algorithm>

namespace cpsec {

std::string_view to_string(SearchField field) {
  switch (field) {
    case SearchField::name: return "name";
    case SearchField::description: return "description";
    case SearchField::extra_text: return "extra_text";
  }
  return "name";
}

std::optional<SearchField> parse_search_field(std::string_view text) {
  for (auto f : {SearchField::name, SearchField::description, SearchField::extra_text})
    if (to_string(f) == text) return f;
  return std::nullopt;
}

void MatchConfig::validate() const {
  if (fields_searched.empty()) throw InvalidOperation("match config: fields_searched is empty");
  if (min_token_len < 2) throw InvalidOperation("match config: min_token_len must be at least 2");
}

namespace {

const MatchSet& empty_set() {
  static const MatchSet empty;
  return empty;
}

std::set<std::string> ids_of(const std::map<std::string, MatchSet>& map, std::string_view id) {
  std::set<std::string> out;
  if (auto it = map.find(std::string(id)); it != map.end())
    for (const auto& m : it->second) out.insert(m.native_id);
  return out;
}

bool contains_phrase(const std::vector<std::string>& haystack, const std::vector<std::string>& phrase) {
  return std::search(haystack.begin(), haystack.end(), phrase.begin(), phrase.end()) != haystack.end();
}

std::string join(const std::vector<std::string>& tokens) {
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

/// Token sequences of the searched fields of one entry.
std::vector<std::vector<std::string>> field_tokens(const AttackEntry& entry, const MatchConfig& config) {
  std::vector<std::vector<std::string>> out;
  if (config.fields_searched.contains(SearchField::name)) out.push_back(tokenize(entry.name, config.min_token_len));
  if (config.fields_searched.contains(SearchField::description))
    out.push_back(tokenize(entry.description, config.min_token_len));
  if (config.fields_searched.contains(SearchField::extra_text))
    for (const auto& t : entry.extra_text) out.push_back(tokenize(t, config.min_token_len));
  return out;
}

/// Candidate positions: entries whose index holds every token.
std::vector<std::uint32_t> candidates(const Corpus& corpus, const std::vector<std::string>& tokens) {
  std::vector<std::span<const std::uint32_t>> lists;
  for (const auto& t : tokens) lists.push_back(corpus.postings(t));
  std::sort(lists.begin(), lists.end(), [](auto a, auto b) { return a.size() < b.size(); });
  std::vector<std::uint32_t> out(lists.front().begin(), lists.front().end());
  std::vector<std::uint32_t> next;
  for (std::size_t i = 1; i < lists.size() && !out.empty(); ++i) {
    next.clear();
    std::set_intersection(out.begin(), out.end(), lists[i].begin(), lists[i].end(), std::back_inserter(next));
    out.swap(next);
  }
  return out;
}

}  // namespace

const MatchSet& MatchMap::node(std::string_view id) const {
  auto it = node_matches.find(std::string(id));
  return it == node_matches.end() ? empty_set() : it->second;
}

const MatchSet& MatchMap::edge(std::string_view id) const {
  auto it = edge_matches.find(std::string(id));
  return it == edge_matches.end() ? empty_set() : it->second;
}

std::set<std::string> MatchMap::node_ids(std::string_view id) const { return ids_of(node_matches, id); }
std::set<std::string> MatchMap::edge_ids(std::string_view id) const { return ids_of(edge_matches, id); }

std::set<std::string> MatchMap::all_ids() const {
  std::set<std::string> out;
  for (const auto* map : {&node_matches, &edge_matches})
    for (const auto& [id, set] : *map)
      for (const auto& m : set) out.insert(m.native_id);
  return out;
}

MatchSet match_element(const AttributeMap& attributes, const Corpus& corpus, const MatchConfig& config) {
  config.validate();
  MatchSet out;
  const auto& entries = corpus.entries();
  for (const auto& [key, value] : attributes) {
    const auto tokens = tokenize(value, config.min_token_len);
    if (tokens.empty()) continue;

    if (config.require_all_tokens_of_value) {
      const std::string term = join(tokens);
      for (auto pos : candidates(corpus, tokens)) {
        const auto& entry = entries[pos];
        const auto fields = field_tokens(entry, config);
        if (std::any_of(fields.begin(), fields.end(), [&](const auto& f) { return contains_phrase(f, tokens); }))
          out.insert({entry.native_id, key, term});
      }
      continue;
    }
    for (const auto& token : tokens) {
      for (auto pos : corpus.postings(token)) {
        const auto& entry = entries[pos];
        const auto fields = field_tokens(entry, config);
        if (std::any_of(fields.begin(), fields.end(),
                        [&](const auto& f) { return std::find(f.begin(), f.end(), token) != f.end(); }))
          out.insert({entry.native_id, key, token});
      }
    }
  }
  return out;
}

MatchMap match_system(const SystemTopology& topology, const Corpus& corpus, const MatchConfig& config) {
  config.validate();
  MatchMap map;
  for (const auto& node : topology.nodes) {
    auto set = match_element(node.attributes, corpus, config);
    if (!set.empty()) map.node_matches.emplace(node.id, std::move(set));
  }
  for (const auto& edge : topology.edges) {
    auto set = match_element(edge.attributes, corpus, config);
    if (!set.empty()) map.edge_matches.emplace(edge.id, std::move(set));
  }
  return map;
}

MatchMap rematch_incremental(MatchMap previous, const SystemTopology& topology, std::string_view changed_id,
                             const Corpus& corpus, const MatchConfig& config) {
  const std::string id(changed_id);
  if (const auto* node = topology.find_node(changed_id)) {
    auto set = match_element(node->attributes, corpus, config);
    if (set.empty())
      previous.node_matches.erase(id);
    else
      previous.node_matches[id] = std::move(set);
    return previous;
  }
  if (const auto* edge = topology.find_edge(changed_id)) {
    auto set = match_element(edge->attributes, corpus, config);
    if (set.empty())
      previous.edge_matches.erase(id);
    else
      previous.edge_matches[id] = std::move(set);
    return previous;
  }
  throw NotFoundError(id);
}

}  // namespace cpsec
