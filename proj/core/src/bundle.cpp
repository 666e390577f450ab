#include "cpsec/bundle.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cpsec/graphml.hpp"

namespace cpsec {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

constexpr std::size_t kBlock = 512;

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("cannot read " + path.string());
  return std::move(buffer).str();
}

void write_file_atomic(const fs::path& path, std::string_view data) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + tmp.string());
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw IoError("cannot write " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot write " + path.string());
  }
}

void put_octal(char* field, std::size_t width, std::uint64_t value) {
  // width - 1 digits followed by NUL
  std::snprintf(field, width, "%0*llo", static_cast<int>(width - 1), static_cast<unsigned long long>(value));
}

std::uint64_t get_octal(const char* field, std::size_t width) {
  std::uint64_t value = 0;
  std::size_t i = 0;
  while (i < width && (field[i] == ' ' || field[i] == '\0')) ++i;
  for (; i < width && field[i] >= '0' && field[i] <= '7'; ++i) value = value * 8 + static_cast<std::uint64_t>(field[i] - '0');
  return value;
}

std::string field_string(const char* field, std::size_t width) {
  return std::string(field, strnlen(field, width));
}

json config_to_json(const MatchConfig& config) {
  json fields = json::array();
  for (auto f : config.fields_searched) fields.push_back(std::string(to_string(f)));
  return {{"fields_searched", fields},
          {"min_token_len", config.min_token_len},
          {"require_all_tokens_of_value", config.require_all_tokens_of_value}};
}

MatchConfig config_from_json(const json& doc) {
  MatchConfig config;
  if (doc.contains("fields_searched")) {
    config.fields_searched.clear();
    for (const auto& f : doc.at("fields_searched")) {
      auto field = parse_search_field(f.get<std::string>());
      if (!field) throw ParseError("manifest: unknown search field \"" + f.get<std::string>() + "\"");
      config.fields_searched.insert(*field);
    }
  }
  if (doc.contains("min_token_len")) config.min_token_len = doc.at("min_token_len").get<std::size_t>();
  if (doc.contains("require_all_tokens_of_value"))
    config.require_all_tokens_of_value = doc.at("require_all_tokens_of_value").get<bool>();
  return config;
}

std::string stored_corpus_path(const std::string& corpus_path, const fs::path& bundle) {
  const fs::path target = fs::weakly_canonical(fs::absolute(corpus_path));
  const fs::path dir = fs::weakly_canonical(fs::absolute(bundle).parent_path());
  const fs::path rel = target.lexically_relative(dir);
  if (!rel.empty() && *rel.begin() != "..") return rel.generic_string();
  return target.generic_string();
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest.data(), &length, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 computation failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  out.reserve(length * 2);
  for (unsigned int i = 0; i < length; ++i) {
    out.push_back(kHex[digest[i] >> 4]);
    out.push_back(kHex[digest[i] & 0xf]);
  }
  return out;
}

std::string write_tar(const std::vector<ArchiveMember>& members) {
  std::string out;
  for (const auto& member : members) {
    if (member.name.empty() || member.name.size() > 99) throw InvalidOperation("archive member name too long: " + member.name);
    std::array<char, kBlock> header{};
    std::memcpy(header.data(), member.name.data(), member.name.size());
    put_octal(header.data() + 100, 8, 0644);
    put_octal(header.data() + 108, 8, 0);
    put_octal(header.data() + 116, 8, 0);
    put_octal(header.data() + 124, 12, member.data.size());
    put_octal(header.data() + 136, 12, 0);
    header[156] = '0';
    std::memcpy(header.data() + 257, "ustar", 6);
    std::memcpy(header.data() + 263, "00", 2);
    std::memset(header.data() + 148, ' ', 8);
    unsigned sum = 0;
    for (char c : header) sum += static_cast<unsigned char>(c);
    std::snprintf(header.data() + 148, 7, "%06o", sum);
    header[154] = '\0';
    header[155] = ' ';
    out.append(header.data(), kBlock);
    out.append(member.data);
    out.append((kBlock - member.data.size() % kBlock) % kBlock, '\0');
  }
  out.append(2 * kBlock, '\0');
  return out;
}

std::vector<ArchiveMember> read_tar(std::string_view archive) {
  std::vector<ArchiveMember> members;
  if (archive.empty()) return members;
  std::size_t offset = 0;
  while (true) {
    if (archive.size() - offset < kBlock) throw ParseError("archive truncated");
    const char* header = archive.data() + offset;
    if (std::all_of(header, header + kBlock, [](char c) { return c == '\0'; })) break;

    const std::uint64_t recorded = get_octal(header + 148, 8);
    std::uint64_t sum = 0;
    for (std::size_t i = 0; i < kBlock; ++i)
      sum += (i >= 148 && i < 156) ? static_cast<unsigned char>(' ') : static_cast<unsigned char>(header[i]);
    if (sum != recorded) throw ParseError("archive header checksum mismatch at offset " + std::to_string(offset));

    const std::uint64_t size = get_octal(header + 124, 12);
    offset += kBlock;
    if (archive.size() - offset < size) throw ParseError("archive truncated");
    const char type = header[156];
    if (type == '0' || type == '\0') {
      std::string name = field_string(header, 100);
      const std::string prefix = field_string(header + 345, 155);
      if (std::memcmp(header + 257, "ustar", 5) == 0 && !prefix.empty()) name = prefix + "/" + name;
      members.push_back({std::move(name), std::string(archive.substr(offset, size))});
    }
    offset += (size + kBlock - 1) / kBlock * kBlock;
    if (offset > archive.size()) throw ParseError("archive truncated");
  }
  return members;
}

RecordedState record_state(const SessionSnapshot& snapshot) {
  return {snapshot.bucket.ids(), snapshot.av.deleted, snapshot.av.expanded};
}

void save_bundle(const Project& project, const fs::path& file, const std::optional<RecordedState>& recorded) {
  json manifest;
  manifest["format"] = "cpsec-bundle";
  manifest["format_version"] = kBundleFormatVersion;
  if (project.corpus_path.empty())
    manifest["corpus"] = nullptr;
  else
    manifest["corpus"] = {{"path", stored_corpus_path(project.corpus_path, file)}, {"sha256", project.corpus_sha256}};
  manifest["match_config"] = config_to_json(project.match_config);
  manifest["surface_policy"] = {{"entry_keys", project.surface_policy.entry_keys}};
  manifest["layout"] = {{"seeds", {{"topology", project.seeds.topology}, {"av", project.seeds.av}}},
                        {"iterations", project.layout_iterations}};
  json session;
  json log = json::array();
  for (const auto& command : project.log) log.push_back(json::parse(encode_command(command)));
  session["edit_log"] = std::move(log);
  if (recorded) {
    session["bucket"] = recorded->bucket;
    session["deleted"] = recorded->deleted;
    session["expanded"] = recorded->expanded;
  }
  manifest["session"] = std::move(session);

  const std::string archive = write_tar({
      {"manifest.json", manifest.dump(2) + "\n"},
      {"topology.graphml", serialize_graphml(project.topology)},
      {"spec.graphml", serialize_graphml(project.spec)},
  });
  write_file_atomic(file, archive);
}

BundleContents read_bundle(const fs::path& file) {
  const std::string archive = read_file(file);
  const auto members = read_tar(archive);
  auto member = [&](std::string_view name) -> const std::string& {
    for (const auto& m : members)
      if (m.name == name) return m.data;
    throw ParseError("bundle has no " + std::string(name));
  };

  json manifest;
  try {
    manifest = json::parse(member("manifest.json"));
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("manifest.json: ") + e.what());
  }

  BundleContents out;
  try {
    if (manifest.value("format", std::string()) != "cpsec-bundle") throw ParseError("manifest.json: not a cpsec bundle");
    const int version = manifest.at("format_version").get<int>();
    if (version != kBundleFormatVersion)
      throw ValidationError({{Severity::error,
                              "unsupported-version",
                              "bundle format_version " + std::to_string(version) + " is not supported (expected " +
                                  std::to_string(kBundleFormatVersion) + ")",
                              {},
                              std::nullopt}});

    Project& project = out.project;
    const json& corpus = manifest.at("corpus");
    if (!corpus.is_null()) {
      fs::path path = corpus.at("path").get<std::string>();
      if (path.is_relative()) path = fs::absolute(file).parent_path() / path;
      project.corpus_path = fs::weakly_canonical(path).string();
      project.corpus_sha256 = corpus.at("sha256").get<std::string>();
    }
    if (manifest.contains("match_config")) project.match_config = config_from_json(manifest.at("match_config"));
    if (manifest.contains("surface_policy"))
      project.surface_policy.entry_keys =
          manifest.at("surface_policy").at("entry_keys").get<std::set<std::string>>();
    if (manifest.contains("layout")) {
      const json& layout = manifest.at("layout");
      project.seeds.topology = layout.at("seeds").at("topology").get<std::uint64_t>();
      project.seeds.av = layout.at("seeds").at("av").get<std::uint64_t>();
      project.layout_iterations = layout.value("iterations", 500);
    }
    const json& session = manifest.at("session");
    for (const auto& command : session.at("edit_log")) project.log.push_back(decode_command(command.dump()));
    if (session.contains("bucket")) {
      RecordedState recorded;
      recorded.bucket = session.at("bucket").get<std::vector<std::string>>();
      recorded.deleted = session.at("deleted").get<std::set<std::string>>();
      recorded.expanded = session.at("expanded").get<std::set<std::string>>();
      out.recorded = std::move(recorded);
    }
  } catch (const json::exception& e) {
    throw ParseError(std::string("manifest.json: ") + e.what());
  }

  auto with_member = [](const char* name, auto&& parse) {
    try {
      return parse();
    } catch (const ParseError& e) {
      throw ParseError(std::string(name) + ": " + e.detail(), e.line());
    }
  };
  auto topology = with_member("topology.graphml", [&] { return parse_topology_graphml(member("topology.graphml")); });
  auto spec = with_member("spec.graphml", [&] { return parse_spec_graphml(member("spec.graphml")); });
  out.project.topology = std::move(topology.value);
  out.project.spec = std::move(spec.value);
  out.diagnostics = std::move(topology.diagnostics);
  out.diagnostics.insert(out.diagnostics.end(), spec.diagnostics.begin(), spec.diagnostics.end());
  return out;
}

std::shared_ptr<const Corpus> load_project_corpus(const Project& project) {
  if (project.corpus_path.empty()) return std::make_shared<const Corpus>();
  const std::string bytes = read_file(project.corpus_path);
  const std::string digest = sha256_hex(bytes);
  if (digest != project.corpus_sha256)
    throw ValidationError({{Severity::error,
                            "corpus-hash-mismatch",
                            "corpus snapshot " + project.corpus_path + " has sha256 " + digest + ", bundle expects " +
                                project.corpus_sha256,
                            {project.corpus_path},
                            std::nullopt}});
  std::istringstream in(bytes);
  return std::make_shared<const Corpus>(load_snapshot(in));
}

LoadedSession load_session(const fs::path& file) {
  BundleContents contents = read_bundle(file);
  auto corpus = load_project_corpus(contents.project);
  auto session = std::make_unique<Session>(std::move(contents.project), std::move(corpus));
  if (contents.recorded && record_state(*session->snapshot()) != *contents.recorded)
    throw ValidationError({{Severity::error,
                            "state-mismatch",
                            "replaying the command log does not reproduce the recorded bucket, deletions or expansions",
                            {},
                            std::nullopt}});
  return {std::move(session), std::move(contents.diagnostics)};
}

void save_session(const Session& session, const fs::path& file) {
  save_bundle(session.project(), file, record_state(*session.snapshot()));
}

Project new_project(const fs::path& topology, const fs::path& spec, const std::optional<fs::path>& corpus_snapshot) {
  Project project;
  project.topology = parse_topology_graphml(read_file(topology)).value;
  project.spec = parse_spec_graphml(read_file(spec)).value;
  auto diagnostics = validate(project.spec, &project.topology);
  if (has_errors(diagnostics)) throw ValidationError(std::move(diagnostics));
  if (corpus_snapshot) {
    project.corpus_path = fs::weakly_canonical(fs::absolute(*corpus_snapshot)).string();
    project.corpus_sha256 = sha256_hex(read_file(*corpus_snapshot));
  }
  return project;
}

}  // namespace cpsec
