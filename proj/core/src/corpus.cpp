#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <regex>
#include <unordered_set>

#include "cpsec/corpus.hpp"

namespace cpsec {

using json = nlohmann::json;

std::string_view to_string(Source source) {
  switch (source) {
    case Source::capec: return "capec";
    case Source::cwe: return "cwe";
    case Source::cve: return "cve";
  }
  return "cve";
}

std::string_view to_string(RelationKind kind) {
  switch (kind) {
    case RelationKind::child_of: return "ChildOf";
    case RelationKind::parent_of: return "ParentOf";
    case RelationKind::peer_of: return "PeerOf";
    case RelationKind::can_precede: return "CanPrecede";
    case RelationKind::can_follow: return "CanFollow";
    case RelationKind::related_weakness: return "RelatedWeakness";
    case RelationKind::weakness_of: return "WeaknessOf";
  }
  return "PeerOf";
}

std::optional<Source> parse_source(std::string_view text) {
  for (auto s : {Source::capec, Source::cwe, Source::cve})
    if (to_string(s) == text) return s;
  return std::nullopt;
}

std::optional<RelationKind> parse_relation_kind(std::string_view text) {
  for (auto k : {RelationKind::child_of, RelationKind::parent_of, RelationKind::peer_of, RelationKind::can_precede,
                 RelationKind::can_follow, RelationKind::related_weakness, RelationKind::weakness_of})
    if (to_string(k) == text) return k;
  return std::nullopt;
}

std::optional<RelationKind> inverse(RelationKind kind) {
  switch (kind) {
    case RelationKind::child_of: return RelationKind::parent_of;
    case RelationKind::parent_of: return RelationKind::child_of;
    case RelationKind::peer_of: return RelationKind::peer_of;
    case RelationKind::can_precede: return RelationKind::can_follow;
    case RelationKind::can_follow: return RelationKind::can_precede;
    case RelationKind::related_weakness: return RelationKind::related_weakness;
    case RelationKind::weakness_of: return std::nullopt;
  }
  return std::nullopt;
}

bool is_valid_native_id(Source source, std::string_view id) {
  static const std::regex capec(R"(^CAPEC-[0-9]+$)");
  static const std::regex cwe(R"(^CWE-[0-9]+$)");
  static const std::regex cve(R"(^CVE-[0-9]{4}-[0-9]{4,}$)");
  const std::string s(id);
  switch (source) {
    case Source::capec: return std::regex_match(s, capec);
    case Source::cwe: return std::regex_match(s, cwe);
    case Source::cve: return std::regex_match(s, cve);
  }
  return false;
}

namespace {

std::optional<Source> source_of_id(std::string_view id) {
  if (id.starts_with("CAPEC-")) return Source::capec;
  if (id.starts_with("CWE-")) return Source::cwe;
  if (id.starts_with("CVE-")) return Source::cve;
  return std::nullopt;
}

/// Whether a relation of `kind` may link an entry of `from` to a target id.
bool relation_allowed(RelationKind kind, Source from, std::string_view target) {
  auto to = source_of_id(target);
  if (!to) return false;
  switch (kind) {
    case RelationKind::related_weakness:
      return (from == Source::capec && *to == Source::cwe) || (from == Source::cwe && *to == Source::capec);
    case RelationKind::weakness_of:
      return from == Source::cve && *to == Source::cwe;
    default:
      return from == *to;
  }
}

void add_unique(std::vector<Relation>& relations, Relation r) {
  if (std::find(relations.begin(), relations.end(), r) == relations.end()) relations.push_back(std::move(r));
}

}  // namespace

const AttackEntry* Corpus::find(std::string_view native_id) const {
  auto it = position_.find(native_id);
  return it == position_.end() ? nullptr : &entries_[it->second];
}

std::span<const std::uint32_t> Corpus::postings(std::string_view token) const {
  auto it = index_.find(token);
  if (it == index_.end()) return {};
  return it->second;
}

std::vector<std::string> Corpus::lookup(std::string_view token) const {
  std::vector<std::string> out;
  for (auto pos : postings(token)) out.push_back(entries_[pos].native_id);
  return out;
}

std::vector<std::string> Corpus::referrers(std::string_view native_id) const {
  std::vector<std::string> out;
  if (auto it = referrers_.find(native_id); it != referrers_.end())
    for (auto pos : it->second) out.push_back(entries_[pos].native_id);
  return out;
}

Corpus build_corpus(std::vector<AttackEntry> input) {
  Corpus corpus;

  std::unordered_map<std::string, std::size_t> slot;
  std::vector<AttackEntry> kept;
  kept.reserve(input.size());
  for (auto& entry : input) {
    auto [it, inserted] = slot.emplace(entry.native_id, kept.size());
    if (inserted) {
      kept.push_back(std::move(entry));
      continue;
    }
    corpus.diagnostics_.push_back({Severity::warning, "duplicate-entry",
                                   "duplicate " + entry.native_id + "; keeping the later record",
                                   {entry.native_id}, {}});
    kept[it->second] = std::move(entry);
  }
  std::sort(kept.begin(), kept.end(),
            [](const AttackEntry& a, const AttackEntry& b) { return a.native_id < b.native_id; });
  corpus.entries_ = std::move(kept);
  corpus.position_.reserve(corpus.entries_.size());
  for (std::uint32_t i = 0; i < corpus.entries_.size(); ++i) {
    const auto& e = corpus.entries_[i];
    corpus.position_.emplace(e.native_id, i);
    ++corpus.counts_[static_cast<std::size_t>(e.source)];
  }

  // Drop relations whose kind does not fit the endpoint sources, then mirror
  // the rest onto their targets.
  std::vector<std::pair<std::uint32_t, Relation>> mirrored;
  for (std::uint32_t i = 0; i < corpus.entries_.size(); ++i) {
    auto& e = corpus.entries_[i];
    auto bad = std::remove_if(e.relations.begin(), e.relations.end(), [&](const Relation& r) {
      if (relation_allowed(r.kind, e.source, r.target)) return false;
      corpus.diagnostics_.push_back({Severity::warning, "bad-relation",
                                     e.native_id + ": " + std::string(to_string(r.kind)) + " -> " + r.target +
                                         " links incompatible sources; dropped",
                                     {e.native_id, r.target}, {}});
      return true;
    });
    e.relations.erase(bad, e.relations.end());
    for (const auto& r : e.relations) {
      auto target = corpus.position_.find(r.target);
      if (target == corpus.position_.end()) {
        corpus.dangling_.push_back({e.native_id, r});
        continue;
      }
      if (auto inv = inverse(r.kind)) mirrored.emplace_back(target->second, Relation{*inv, e.native_id});
    }
  }
  for (auto& [pos, r] : mirrored) add_unique(corpus.entries_[pos].relations, std::move(r));
  if (!corpus.dangling_.empty()) {
    corpus.diagnostics_.push_back({Severity::warning, "dangling-relations",
                                   std::to_string(corpus.dangling_.size()) +
                                       " relations point at entries missing from the corpus",
                                   {}, {}});
  }

  std::vector<std::string> tokens;
  for (std::uint32_t i = 0; i < corpus.entries_.size(); ++i) {
    auto& e = corpus.entries_[i];
    std::sort(e.relations.begin(), e.relations.end());
    for (const auto& r : e.relations) {
      if (auto target = corpus.position_.find(r.target); target != corpus.position_.end())
        corpus.referrers_[r.target].push_back(i);
    }

    tokens = tokenize(e.name);
    auto more = tokenize(e.description);
    tokens.insert(tokens.end(), more.begin(), more.end());
    for (const auto& text : e.extra_text) {
      more = tokenize(text);
      tokens.insert(tokens.end(), more.begin(), more.end());
    }
    std::sort(tokens.begin(), tokens.end());
    tokens.erase(std::unique(tokens.begin(), tokens.end()), tokens.end());
    for (auto& token : tokens) corpus.index_[std::move(token)].push_back(i);
  }
  for (auto& [id, list] : corpus.referrers_) {
    std::sort(list.begin(), list.end());
    list.erase(std::unique(list.begin(), list.end()), list.end());
  }
  return corpus;
}

void save_snapshot(const Corpus& corpus, std::ostream& out) {
  out << json{{"format", "cpsec-corpus"}, {"version", kCorpusSnapshotVersion}, {"entries", corpus.size()}}.dump()
      << '\n';
  for (const auto& e : corpus.entries()) {
    json relations = json::array();
    for (const auto& r : e.relations) relations.push_back({to_string(r.kind), r.target});
    json line{{"source", to_string(e.source)},
              {"id", e.native_id},
              {"name", e.name},
              {"description", e.description},
              {"severity", e.severity ? json(*e.severity) : json(nullptr)},
              {"relations", std::move(relations)},
              {"extra", e.extra_text}};
    out << line.dump() << '\n';
  }
}

Corpus load_snapshot(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError("empty corpus snapshot", 1);
  json header;
  try {
    header = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("bad snapshot header: ") + e.what(), 1);
  }
  if (!header.is_object() || header.value("format", "") != "cpsec-corpus")
    throw ParseError("not a cpsec corpus snapshot", 1);
  if (header.value("version", 0) != kCorpusSnapshotVersion)
    throw ParseError("unsupported corpus snapshot version " + header["version"].dump(), 1);

  std::vector<AttackEntry> entries;
  int number = 1;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      AttackEntry e;
      auto source = parse_source(j.at("source").get<std::string>());
      if (!source) throw ParseError("unknown source", number);
      e.source = *source;
      e.native_id = j.at("id").get<std::string>();
      e.name = j.at("name").get<std::string>();
      e.description = j.at("description").get<std::string>();
      if (!j.at("severity").is_null()) e.severity = j["severity"].get<double>();
      for (const auto& r : j.at("relations")) {
        auto kind = parse_relation_kind(r.at(0).get<std::string>());
        if (!kind) throw ParseError("unknown relation kind", number);
        e.relations.push_back({*kind, r.at(1).get<std::string>()});
      }
      e.extra_text = j.at("extra").get<std::vector<std::string>>();
      entries.push_back(std::move(e));
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad snapshot record: ") + e.what(), number);
    }
  }
  if (header.contains("entries") && header["entries"].get<std::size_t>() != entries.size())
    throw ParseError("snapshot truncated: header announces " + header["entries"].dump() + " entries, found " +
                     std::to_string(entries.size()));
  return build_corpus(std::move(entries));
}

void save_snapshot(const Corpus& corpus, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  save_snapshot(corpus, out);
  if (!out) throw IoError("write failed for " + path.string());
}

Corpus load_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return load_snapshot(in);
}

}  // namespace cpsec
