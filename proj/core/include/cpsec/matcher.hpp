#pragma once

#include <map>
#include <set>
#include <string>
#include <string_view>

#include "cpsec/corpus.hpp"
#include "cpsec/graph.hpp"

namespace cpsec {

enum class SearchField { name, description, extra_text };

std::string_view to_string(SearchField field);
std::optional<SearchField> parse_search_field(std::string_view text);

struct MatchConfig {
  std::set<SearchField> fields_searched{SearchField::name, SearchField::description, SearchField::extra_text};
  std::size_t min_token_len = 2;
  /// When true a multi-token attribute value must occur as a contiguous phrase.
  bool require_all_tokens_of_value = true;

  /// Throws InvalidOperation when fields_searched is empty or min_token_len < 2.
  void validate() const;

  bool operator==(const MatchConfig&) const = default;
};

/// One piece of evidence: attack entry `native_id` matched because attribute
/// `key` contributed `term` (lowercased token or space-joined phrase).
struct Match {
  std::string native_id;
  std::string key;
  std::string term;

  auto operator<=>(const Match&) const = default;
};

using MatchSet = std::set<Match>;

/// Evidence per topology element. Elements with no evidence are absent.
struct MatchMap {
  std::map<std::string, MatchSet> node_matches;
  std::map<std::string, MatchSet> edge_matches;

  const MatchSet& node(std::string_view id) const;
  const MatchSet& edge(std::string_view id) const;
  /// Distinct native ids matched on a node (or edge).
  std::set<std::string> node_ids(std::string_view id) const;
  std::set<std::string> edge_ids(std::string_view id) const;
  /// Every native id matched anywhere.
  std::set<std::string> all_ids() const;

  bool operator==(const MatchMap&) const = default;
};

MatchSet match_element(const AttributeMap& attributes, const Corpus& corpus, const MatchConfig& config);

MatchMap match_system(const SystemTopology& topology, const Corpus& corpus, const MatchConfig& config);

/// Recomputes only `changed_id` (a node or edge of the edited topology).
/// Throws NotFoundError for an id that is neither.
MatchMap rematch_incremental(MatchMap previous, const SystemTopology& topology, std::string_view changed_id,
                             const Corpus& corpus, const MatchConfig& config);

}  // namespace cpsec
