#pragma once

// Project bundle: a ustar archive holding
//
//   manifest.json     format_version, corpus reference, match config, surface
//                     policy, layout seeds and the session state (bucket,
//                     deletions, expansions, command log)
//   topology.graphml  base topology, before any logged edit
//   spec.graphml      specification
//
// Loading replays the command log on top of the base documents.

#include <filesystem>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "cpsec/corpus.hpp"
#include "cpsec/session.hpp"

namespace cpsec {

inline constexpr int kBundleFormatVersion = 1;

/// Session state recorded next to the log so a load can check its replay.
struct RecordedState {
  std::vector<std::string> bucket;
  std::set<std::string> deleted;
  std::set<std::string> expanded;

  bool operator==(const RecordedState&) const = default;
};

RecordedState record_state(const SessionSnapshot& snapshot);

struct BundleContents {
  Project project;  // corpus_path resolved to an absolute path
  std::optional<RecordedState> recorded;
  std::vector<Diagnostic> diagnostics;  // parse warnings
};

/// Throws IoError when the file cannot be written.
void save_bundle(const Project& project, const std::filesystem::path& file,
                 const std::optional<RecordedState>& recorded = std::nullopt);
/// Throws IoError, ParseError (archive, manifest or GraphML) or
/// ValidationError (unsupported format_version, model invariants).
BundleContents read_bundle(const std::filesystem::path& file);

/// Reads the referenced corpus snapshot and checks its hash. An empty path
/// yields an empty corpus. Throws IoError or ValidationError on mismatch.
std::shared_ptr<const Corpus> load_project_corpus(const Project& project);

struct LoadedSession {
  std::unique_ptr<Session> session;
  std::vector<Diagnostic> diagnostics;
};

/// read_bundle, load_project_corpus, construct the session and compare the
/// replay against the recorded state. Nothing is returned on failure.
LoadedSession load_session(const std::filesystem::path& file);
void save_session(const Session& session, const std::filesystem::path& file);

/// A fresh project from GraphML files and an optional corpus snapshot.
Project new_project(const std::filesystem::path& topology, const std::filesystem::path& spec,
                    const std::optional<std::filesystem::path>& corpus_snapshot);

std::string sha256_hex(std::string_view bytes);

// ustar helpers, exposed for tests.
struct ArchiveMember {
  std::string name;
  std::string data;

  bool operator==(const ArchiveMember&) const = default;
};

std::string write_tar(const std::vector<ArchiveMember>& members);
/// Regular files only; other member types are skipped. Throws ParseError on a
/// bad checksum or truncated archive.
std::vector<ArchiveMember> read_tar(std::string_view archive);

}  // namespace cpsec
