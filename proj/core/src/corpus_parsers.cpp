#include <zlib.h>

#include <algorithm>
#include <fstream>
#include <nlohmann/json.hpp>
#include <regex>
#include <sstream>

#include "cpsec/corpus.hpp"
#include "xml.hpp"

namespace cpsec {

namespace {

using json = nlohmann::json;

Diagnostic warning(std::string code, std::string message, std::vector<std::string> subjects,
                   std::optional<int> line = {}) {
  return {Severity::warning, std::move(code), std::move(message), std::move(subjects), line};
}

/// Catalog "Nature" attribute to a relation kind. CWE's weaker natures
/// (CanAlsoBe, Requires, StartsWith) fold into PeerOf.
std::optional<RelationKind> nature_to_kind(std::string_view nature) {
  if (nature == "ChildOf") return RelationKind::child_of;
  if (nature == "ParentOf") return RelationKind::parent_of;
  if (nature == "PeerOf" || nature == "CanAlsoBe" || nature == "Requires" || nature == "StartsWith")
    return RelationKind::peer_of;
  if (nature == "CanPrecede") return RelationKind::can_precede;
  if (nature == "CanFollow") return RelationKind::can_follow;
  return std::nullopt;
}

void add_relation(AttackEntry& entry, RelationKind kind, std::string target) {
  Relation r{kind, std::move(target)};
  if (std::find(entry.relations.begin(), entry.relations.end(), r) == entry.relations.end())
    entry.relations.push_back(std::move(r));
}

void append_texts(const xml::Element* container, std::string_view item, AttackEntry& entry) {
  if (!container) return;
  for (const auto* e : container->children_named(item)) {
    std::string text = e->deep_text();
    if (!text.empty()) entry.extra_text.push_back(std::move(text));
  }
}

bool is_withdrawn(const xml::Element& e) {
  const auto* status = e.attribute("Status");
  return status && (*status == "Deprecated" || *status == "Obsolete");
}

/// Shared skeleton for the two MITRE catalogs.
template <typename Fill>
Parsed<std::vector<AttackEntry>> parse_catalog(std::string_view document, std::string_view root_name,
                                               std::string_view list_name, std::string_view item_name,
                                               Source source, std::string_view prefix, Fill fill) {
  const xml::Element root = xml::parse(document);
  if (root.name != root_name)
    throw ParseError("unrecognized catalog root <" + root.name + ">, expected <" + std::string(root_name) + ">",
                     root.line);
  Parsed<std::vector<AttackEntry>> result;
  const auto* list = root.child(list_name);
  if (!list) return result;
  for (const auto* item : list->children_named(item_name)) {
    const auto* id = item->attribute("ID");
    if (!id || id->empty()) {
      result.diagnostics.push_back(
          warning("missing-id", "<" + std::string(item_name) + "> without ID skipped", {}, item->line));
      continue;
    }
    AttackEntry entry;
    entry.source = source;
    entry.native_id = std::string(prefix) + *id;
    if (!is_valid_native_id(source, entry.native_id)) {
      result.diagnostics.push_back(
          warning("bad-id", "malformed id \"" + entry.native_id + "\" skipped", {entry.native_id}, item->line));
      continue;
    }
    if (is_withdrawn(*item)) {
      result.diagnostics.push_back(
          warning("deprecated", entry.native_id + " is deprecated; skipped", {entry.native_id}, item->line));
      continue;
    }
    if (const auto* name = item->attribute("Name")) entry.name = *name;
    if (const auto* description = item->child("Description")) entry.description = description->deep_text();
    if (const auto* extended = item->child("Extended_Description")) {
      std::string text = extended->deep_text();
      if (!text.empty()) entry.extra_text.push_back(std::move(text));
    }
    if (const auto* terms = item->child("Alternate_Terms")) {
      for (const auto* term : terms->children_named("Alternate_Term"))
        if (const auto* t = term->child("Term")) entry.extra_text.push_back(t->deep_text());
    }
    fill(*item, entry, result.diagnostics);
    result.value.push_back(std::move(entry));
  }
  return result;
}

void read_hierarchy(const xml::Element* list, std::string_view item_name, std::string_view id_attribute,
                    std::string_view prefix, AttackEntry& entry, std::vector<Diagnostic>& diagnostics) {
  if (!list) return;
  for (const auto* rel : list->children_named(item_name)) {
    const auto* nature = rel->attribute("Nature");
    const auto* target = rel->attribute(id_attribute);
    if (!nature || !target) continue;
    auto kind = nature_to_kind(*nature);
    if (!kind) {
      diagnostics.push_back(warning("unknown-nature",
                                    entry.native_id + ": relation nature \"" + *nature + "\" ignored",
                                    {entry.native_id}, rel->line));
      continue;
    }
    add_relation(entry, *kind, std::string(prefix) + *target);
  }
}

std::string inflate_gzip(std::string_view data) {
  z_stream stream{};
  if (inflateInit2(&stream, 15 + 32) != Z_OK) throw IoError("zlib initialisation failed");
  stream.next_in = reinterpret_cast<Bytef*>(const_cast<char*>(data.data()));
  stream.avail_in = static_cast<uInt>(data.size());
  std::string out;
  char buffer[1 << 16];
  int rc = Z_OK;
  while (rc != Z_STREAM_END) {
    stream.next_out = reinterpret_cast<Bytef*>(buffer);
    stream.avail_out = sizeof buffer;
    rc = inflate(&stream, Z_NO_FLUSH);
    if (rc != Z_OK && rc != Z_STREAM_END) {
      inflateEnd(&stream);
      throw ParseError("corrupt gzip stream");
    }
    out.append(buffer, sizeof buffer - stream.avail_out);
    if (rc == Z_OK && stream.avail_in == 0 && stream.avail_out != 0) {
      inflateEnd(&stream);
      throw ParseError("truncated gzip stream");
    }
  }
  inflateEnd(&stream);
  return out;
}

void collect_cpe_text(const json& node, AttackEntry& entry) {
  if (auto it = node.find("cpe_match"); it != node.end() && it->is_array()) {
    for (const auto& match : *it) {
      auto uri = match.value("cpe23Uri", std::string{});
      // cpe:2.3:part:vendor:product:version:...
      std::vector<std::string> parts;
      std::stringstream ss(uri);
      for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
      std::string text;
      for (std::size_t i = 3; i < parts.size() && i <= 5; ++i) {
        if (parts[i] == "*" || parts[i] == "-" || parts[i].empty()) continue;
        std::replace(parts[i].begin(), parts[i].end(), '_', ' ');
        if (!text.empty()) text += ' ';
        text += parts[i];
      }
      if (!text.empty() && std::find(entry.extra_text.begin(), entry.extra_text.end(), text) == entry.extra_text.end())
        entry.extra_text.push_back(std::move(text));
    }
  }
  if (auto it = node.find("children"); it != node.end() && it->is_array())
    for (const auto& child : *it) collect_cpe_text(child, entry);
}

std::optional<double> base_score(const json& impact) {
  if (!impact.is_object()) return std::nullopt;
  for (const auto& [metric, cvss] : {std::pair{"baseMetricV3", "cvssV3"}, std::pair{"baseMetricV2", "cvssV2"}}) {
    auto m = impact.find(metric);
    if (m == impact.end() || !m->is_object()) continue;
    auto c = m->find(cvss);
    if (c == m->end() || !c->is_object()) continue;
    auto s = c->find("baseScore");
    if (s != c->end() && s->is_number()) return s->get<double>();
  }
  return std::nullopt;
}

}  // namespace

Parsed<std::vector<AttackEntry>> parse_capec(std::string_view xml_text) {
  return parse_catalog(
      xml_text, "Attack_Pattern_Catalog", "Attack_Patterns", "Attack_Pattern", Source::capec, "CAPEC-",
      [](const xml::Element& item, AttackEntry& entry, std::vector<Diagnostic>& diagnostics) {
        read_hierarchy(item.child("Related_Attack_Patterns"), "Related_Attack_Pattern", "CAPEC_ID", "CAPEC-",
                       entry, diagnostics);
        if (const auto* weaknesses = item.child("Related_Weaknesses")) {
          for (const auto* w : weaknesses->children_named("Related_Weakness"))
            if (const auto* id = w->attribute("CWE_ID")) add_relation(entry, RelationKind::related_weakness, "CWE-" + *id);
        }
        if (const auto* prerequisites = item.child("Prerequisites"))
          append_texts(prerequisites, "Prerequisite", entry);
      });
}

Parsed<std::vector<AttackEntry>> parse_cwe(std::string_view xml_text) {
  return parse_catalog(
      xml_text, "Weakness_Catalog", "Weaknesses", "Weakness", Source::cwe, "CWE-",
      [](const xml::Element& item, AttackEntry& entry, std::vector<Diagnostic>& diagnostics) {
        read_hierarchy(item.child("Related_Weaknesses"), "Related_Weakness", "CWE_ID", "CWE-", entry, diagnostics);
        if (const auto* patterns = item.child("Related_Attack_Patterns")) {
          for (const auto* p : patterns->children_named("Related_Attack_Pattern"))
            if (const auto* id = p->attribute("CAPEC_ID"))
              add_relation(entry, RelationKind::related_weakness, "CAPEC-" + *id);
        }
        if (const auto* platforms = item.child("Applicable_Platforms")) {
          for (const auto& platform : platforms->children) {
            const auto* name = platform.attribute("Name");
            if (!name) name = platform.attribute("Class");
            if (name && name->find("Not ") != 0) entry.extra_text.push_back(*name);
          }
        }
      });
}

Parsed<std::vector<AttackEntry>> parse_nvd_feed(std::string_view text) {
  json feed;
  try {
    feed = json::parse(text.begin(), text.end());
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("malformed JSON: ") + e.what());
  }
  if (!feed.is_object() || !feed.contains("CVE_Items") || !feed["CVE_Items"].is_array())
    throw ParseError("not an NVD 1.1 feed: missing CVE_Items array");

  static const std::regex cwe_pattern(R"(^CWE-[0-9]+$)");
  Parsed<std::vector<AttackEntry>> result;
  std::size_t index = 0;
  for (const auto& item : feed["CVE_Items"]) {
    ++index;
    std::optional<std::string> id;
    if (item.is_object() && item.contains("cve")) {
      const json meta = item["cve"].value("CVE_data_meta", json::object());
      if (meta.contains("ID") && meta["ID"].is_string()) id = meta["ID"].get<std::string>();
    }
    if (!id) throw ParseError("CVE item " + std::to_string(index) + " has no CVE id");

    AttackEntry entry;
    entry.source = Source::cve;
    entry.native_id = std::move(*id);
    entry.name = entry.native_id;
    if (!is_valid_native_id(Source::cve, entry.native_id))
      throw ParseError("CVE item " + std::to_string(index) + " has malformed id \"" + entry.native_id + "\"");

    const auto& cve = item["cve"];
    const auto descriptions = cve.value("description", json::object()).value("description_data", json::array());
    for (const auto& d : descriptions) {
      if (d.value("lang", "") == "en") {
        entry.description = d.value("value", "");
        break;
      }
    }
    if (entry.description.starts_with("** REJECT **") || entry.description.starts_with("** RESERVED **")) {
      result.diagnostics.push_back(
          warning("rejected", entry.native_id + " is rejected or reserved; skipped", {entry.native_id}));
      continue;
    }
    for (const auto& problem : cve.value("problemtype", json::object()).value("problemtype_data", json::array())) {
      for (const auto& d : problem.value("description", json::array())) {
        const auto value = d.value("value", "");
        if (std::regex_match(value, cwe_pattern)) add_relation(entry, RelationKind::weakness_of, value);
      }
    }
    if (auto score = base_score(item.value("impact", json::object()))) {
      if (*score >= 0.0 && *score <= 10.0) {
        entry.severity = *score;
      } else {
        result.diagnostics.push_back(
            warning("bad-score", entry.native_id + ": CVSS score out of range ignored", {entry.native_id}));
      }
    }
    for (const auto& node : item.value("configurations", json::object()).value("nodes", json::array()))
      collect_cpe_text(node, entry);
    result.value.push_back(std::move(entry));
  }
  return result;
}

std::string read_feed_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("cannot read " + path.string());
  if (data.size() >= 2 && static_cast<unsigned char>(data[0]) == 0x1f && static_cast<unsigned char>(data[1]) == 0x8b)
    return inflate_gzip(data);
  return data;
}

}  // namespace cpsec
