#pragma once

#include <map>
#include <optional>
#include <regex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cpsec/corpus.hpp"
#include "cpsec/matcher.hpp"

namespace cpsec {

enum class VertexKind { capec, cwe, cve };

std::string_view to_string(VertexKind kind);
VertexKind kind_of(Source source);

/// Synthetic CWE vertex that absorbs matched CVEs without a usable CWE mapping.
inline constexpr std::string_view kUnmappedCwe = "CWE-unmapped";

struct AvVertex {
  std::string native_id;
  VertexKind kind = VertexKind::capec;
  std::size_t weight = 0;  // consumed CVE count; cwe vertices only
  bool visible = true;

  bool operator==(const AvVertex&) const = default;
};

using UndirectedEdge = std::pair<std::string, std::string>;  // first < second

/// The attack-vector graph of one session. CVE vertices are folded into the
/// CWE vertices that consume them and stay hidden until their CWE is expanded.
struct AvGraph {
  std::map<std::string, AvVertex> vertices;
  std::set<UndirectedEdge> edges;      // links whose endpoints are both visible
  std::set<UndirectedEdge> relations;  // every link among present vertices, visible or not
  std::map<std::string, std::set<std::string>> consumed;  // cwe -> cves
  std::set<std::string> expanded;
  std::set<std::string> deleted;  // sticky for the session, survives rebuilds

  std::set<std::string> visible_ids() const;
  std::size_t visible_count() const;

  bool operator==(const AvGraph&) const = default;
};

AvGraph build_av_graph(const MatchMap& matches, const Corpus& corpus);

/// Reveals the CVEs consumed by a CWE vertex. Idempotent. Throws NotFoundError
/// for an unknown vertex and InvalidOperation for a non-cwe vertex.
AvGraph expand_vertex(AvGraph graph, const std::string& cwe_id);

/// Removes vertices and incident edges. A CVE leaves every consuming CWE (its
/// weights drop); a CWE takes its consumed CVEs with it. Throws NotFoundError
/// for ids that are not present.
AvGraph delete_vertices(AvGraph graph, std::span<const std::string> ids);

/// build_av_graph followed by replaying the session's deletions and expansions.
AvGraph rebuild_av_graph(const MatchMap& matches, const Corpus& corpus, const std::set<std::string>& deleted,
                         const std::set<std::string>& expanded);

enum class QueryField { id, name, description, components };

std::string_view to_string(QueryField field);
std::optional<QueryField> parse_query_field(std::string_view text);

/// A filter-bar query. Patterns use the ECMAScript dialect of std::regex,
/// case-insensitive, and match anywhere in a field (search, not full match).
class Query {
 public:
  /// Throws InvalidOperation when `pattern` does not compile. An empty field
  /// set means all fields.
  explicit Query(std::string pattern = {}, std::set<QueryField> fields = {},
                 std::optional<std::set<std::string>> component_filter = std::nullopt, bool bucket_only = false);

  const std::string& pattern() const { return pattern_; }
  const std::set<QueryField>& fields() const { return fields_; }
  const std::optional<std::set<std::string>>& component_filter() const { return component_filter_; }
  bool bucket_only() const { return bucket_only_; }

  Query with_component_filter(std::optional<std::set<std::string>> filter) const;
  Query with_bucket_only(bool value) const;

  bool matches_text(std::string_view text) const;

 private:
  std::string pattern_;
  std::set<QueryField> fields_;
  std::optional<std::set<std::string>> component_filter_;
  bool bucket_only_;
  std::regex regex_;
};

struct BucketRow {
  std::string native_id;
  VertexKind kind = VertexKind::capec;
  std::string name;
  std::string description;
  std::set<std::string> violated_components;  // topology node ids

  bool operator==(const BucketRow&) const = default;
};

struct Bucket {
  std::vector<BucketRow> rows;

  bool contains(std::string_view native_id) const;
  std::vector<std::string> ids() const;

  bool operator==(const Bucket&) const = default;
};

std::set<std::string> filter_av(const AvGraph& graph, const Query& query, const MatchMap& matches,
                                const Bucket& bucket, const Corpus& corpus);

/// Appends a row derived from the corpus and match map. Throws NotFoundError
/// for ids absent from the corpus and InvalidOperation for duplicates.
Bucket bucket_add(Bucket bucket, const std::string& native_id, const MatchMap& matches, const Corpus& corpus);
/// Throws NotFoundError when no row has `native_id`.
Bucket bucket_remove(Bucket bucket, const std::string& native_id);
/// Re-derives every row from the current match map, keeping the order.
Bucket bucket_refresh(const Bucket& bucket, const MatchMap& matches, const Corpus& corpus);

/// "csv": comma separated, every field quoted, header
/// id,kind,name,description,violated_components (components joined by ';').
/// "json": {"rows":[{...same fields...}]}. Throws InvalidOperation otherwise.
std::string bucket_export(const Bucket& bucket, std::string_view format);

/// Display name/description for an AV vertex, including the synthetic one.
std::pair<std::string, std::string> describe_vertex(std::string_view native_id, const Corpus& corpus);

}  // namespace cpsec
