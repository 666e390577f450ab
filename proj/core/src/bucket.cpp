#include <algorithm>
#include <nlohmann/json.hpp>

#include "cpsec/av_graph.hpp"

namespace cpsec {

namespace {

BucketRow derive_row(const AttackEntry& entry, const MatchMap& matches) {
  BucketRow row{entry.native_id, kind_of(entry.source), entry.name, entry.description, {}};
  for (const auto& [node, set] : matches.node_matches) {
    if (std::any_of(set.begin(), set.end(), [&](const Match& m) { return m.native_id == entry.native_id; }))
      row.violated_components.insert(node);
  }
  return row;
}

std::string csv_field(std::string_view value) {
  std::string out = "\"";
  for (char c : value) {
    if (c == '"') out.push_back('"');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string join_components(const std::set<std::string>& components) {
  std::string out;
  for (const auto& c : components) {
    if (!out.empty()) out.push_back(';');
    out += c;
  }
  return out;
}

}  // namespace

bool Bucket::contains(std::string_view native_id) const {
  return std::any_of(rows.begin(), rows.end(), [&](const BucketRow& r) { return r.native_id == native_id; });
}

std::vector<std::string> Bucket::ids() const {
  std::vector<std::string> out;
  for (const auto& r : rows) out.push_back(r.native_id);
  return out;
}

Bucket bucket_add(Bucket bucket, const std::string& native_id, const MatchMap& matches, const Corpus& corpus) {
  const auto* entry = corpus.find(native_id);
  if (!entry) throw NotFoundError(native_id);
  if (bucket.contains(native_id)) throw InvalidOperation(native_id + " is already in the bucket");
  bucket.rows.push_back(derive_row(*entry, matches));
  return bucket;
}

Bucket bucket_remove(Bucket bucket, const std::string& native_id) {
  auto it = std::find_if(bucket.rows.begin(), bucket.rows.end(),
                         [&](const BucketRow& r) { return r.native_id == native_id; });
  if (it == bucket.rows.end()) throw NotFoundError(native_id);
  bucket.rows.erase(it);
  return bucket;
}

Bucket bucket_refresh(const Bucket& bucket, const MatchMap& matches, const Corpus& corpus) {
  Bucket out;
  for (const auto& row : bucket.rows) {
    const auto* entry = corpus.find(row.native_id);
    if (!entry) throw NotFoundError(row.native_id);
    out.rows.push_back(derive_row(*entry, matches));
  }
  return out;
}

std::string bucket_export(const Bucket& bucket, std::string_view format) {
  if (format == "csv") {
    std::string out = "id,kind,name,description,violated_components\n";
    for (const auto& row : bucket.rows) {
      out += csv_field(row.native_id) + ',' + csv_field(to_string(row.kind)) + ',' + csv_field(row.name) + ',' +
             csv_field(row.description) + ',' + csv_field(join_components(row.violated_components)) + '\n';
    }
    return out;
  }
  if (format == "json") {
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : bucket.rows) {
      rows.push_back({{"id", row.native_id},
                      {"kind", to_string(row.kind)},
                      {"name", row.name},
                      {"description", row.description},
                      {"violated_components", row.violated_components}});
    }
    return nlohmann::json{{"rows", std::move(rows)}}.dump(2) + "\n";
  }
  throw InvalidOperation("unsupported bucket export format \"" + std::string(format) + "\"");
}

}  // namespace cpsec
