#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "cpsec/diagnostics.hpp"

namespace cpsec {

enum class Source { capec, cwe, cve };

enum class RelationKind {
  child_of,
  parent_of,
  peer_of,
  can_precede,
  can_follow,
  related_weakness,  // CAPEC <-> CWE
  weakness_of,       // CVE -> CWE
};

std::string_view to_string(Source source);
std::string_view to_string(RelationKind kind);
std::optional<Source> parse_source(std::string_view text);
std::optional<RelationKind> parse_relation_kind(std::string_view text);

/// The kind recorded on the target when a relation is mirrored, if any.
std::optional<RelationKind> inverse(RelationKind kind);

struct Relation {
  RelationKind kind;
  std::string target;

  auto operator<=>(const Relation&) const = default;
};

struct AttackEntry {
  Source source = Source::cve;
  std::string native_id;  // "CAPEC-117", "CWE-89", "CVE-2017-0144"
  std::string name;
  std::string description;
  std::optional<double> severity;  // CVSS base score, CVE only
  std::vector<Relation> relations;
  std::vector<std::string> extra_text;  // platforms, prerequisites; used only for matching

  bool operator==(const AttackEntry&) const = default;
};

bool is_valid_native_id(Source source, std::string_view id);

/// Lowercases, splits on non-alphanumerics and keeps tokens of at least
/// `min_len` bytes. A '.' between two digits stays inside the token so
/// version-like strings ("802.11", "2.6.32") survive whole. Bytes >= 0x80 are
/// treated as token characters.
std::vector<std::string> tokenize(std::string_view text, std::size_t min_len = 2);

// CAPEC v3.x catalog. Deprecated patterns are skipped with a warning.
Parsed<std::vector<AttackEntry>> parse_capec(std::string_view xml);
// CWE v4.x catalog. Deprecated weaknesses are skipped with a warning.
Parsed<std::vector<AttackEntry>> parse_cwe(std::string_view xml);
// NVD JSON feed 1.1 (plain text; see read_feed_file for gzip). Rejected
// entries are skipped with a warning.
Parsed<std::vector<AttackEntry>> parse_nvd_feed(std::string_view json);

/// Reads a file, transparently inflating gzip content. Throws IoError.
std::string read_feed_file(const std::filesystem::path& path);

struct DanglingRelation {
  std::string source;
  Relation relation;

  auto operator<=>(const DanglingRelation&) const = default;
};

/// Normalized, relation-closed and text-indexed attack entries. Immutable once
/// built; share it by const reference or shared_ptr<const Corpus>.
class Corpus {
 public:
  Corpus() = default;

  std::span<const AttackEntry> entries() const { return entries_; }  // sorted by native_id
  const AttackEntry* find(std::string_view native_id) const;
  std::size_t size() const { return entries_.size(); }
  std::size_t count(Source source) const { return counts_[static_cast<std::size_t>(source)]; }

  /// Positions (into entries()) of every entry whose name, description or
  /// extra_text contains `token`. Empty span for unknown tokens.
  std::span<const std::uint32_t> postings(std::string_view token) const;
  std::vector<std::string> lookup(std::string_view token) const;
  std::size_t index_size() const { return index_.size(); }

  /// Entries whose relations point at `native_id`.
  std::vector<std::string> referrers(std::string_view native_id) const;

  const std::vector<DanglingRelation>& dangling() const { return dangling_; }
  const std::vector<Diagnostic>& diagnostics() const { return diagnostics_; }

 private:
  friend Corpus build_corpus(std::vector<AttackEntry> entries);

  struct StringHash {
    using is_transparent = void;
    std::size_t operator()(std::string_view s) const { return std::hash<std::string_view>{}(s); }
  };

  std::vector<AttackEntry> entries_;
  std::unordered_map<std::string, std::uint32_t, StringHash, std::equal_to<>> position_;
  std::unordered_map<std::string, std::vector<std::uint32_t>, StringHash, std::equal_to<>> index_;
  std::unordered_map<std::string, std::vector<std::uint32_t>, StringHash, std::equal_to<>> referrers_;
  std::size_t counts_[3] = {0, 0, 0};
  std::vector<DanglingRelation> dangling_;
  std::vector<Diagnostic> diagnostics_;
};

/// Deduplicates by native_id (last wins, one warning per dropped entry),
/// mirrors hierarchy relations onto their targets, flags dangling targets and
/// builds the inverted token index.
Corpus build_corpus(std::vector<AttackEntry> entries);

/// Line-delimited snapshot: a header line {"format":"cpsec-corpus","version":1}
/// followed by one JSON object per entry.
void save_snapshot(const Corpus& corpus, std::ostream& out);
Corpus load_snapshot(std::istream& in);
void save_snapshot(const Corpus& corpus, const std::filesystem::path& path);
Corpus load_snapshot(const std::filesystem::path& path);

inline constexpr int kCorpusSnapshotVersion = 1;

}  // namespace cpsec
