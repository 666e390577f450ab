#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "cpsec/analysis.hpp"
#include "cpsec/av_graph.hpp"
#include "cpsec/corpus.hpp"
#include "cpsec/graph.hpp"
#include "cpsec/layout.hpp"
#include "cpsec/matcher.hpp"

namespace cpsec {

// Logged session commands. Only these are persisted and undoable; selection,
// filtering and projection are view state.
struct EditCommand {
  AttributeEdit edit;
  bool operator==(const EditCommand&) const = default;
};
struct DeleteCommand {
  std::vector<std::string> ids;
  bool operator==(const DeleteCommand&) const = default;
};
struct ExpandCommand {
  std::string cwe;
  bool operator==(const ExpandCommand&) const = default;
};
struct BucketAddCommand {
  std::string native_id;
  bool operator==(const BucketAddCommand&) const = default;
};
struct BucketRemoveCommand {
  std::string native_id;
  bool operator==(const BucketRemoveCommand&) const = default;
};
struct ResetDeletionsCommand {
  bool operator==(const ResetDeletionsCommand&) const = default;
};

using Command =
    std::variant<EditCommand, DeleteCommand, ExpandCommand, BucketAddCommand, BucketRemoveCommand, ResetDeletionsCommand>;

/// {"op":"edit","element":..,"action":"add"|"remove","key":..,"value":..}
/// {"op":"delete","ids":[..]}  {"op":"expand","id":..}
/// {"op":"bucket_add","id":..}  {"op":"bucket_remove","id":..}  {"op":"reset_deletions"}
std::string encode_command(const Command& command);
/// Throws ParseError for malformed JSON or an unknown op.
Command decode_command(std::string_view json);

struct LayoutSeeds {
  std::uint64_t topology = 1;
  std::uint64_t av = 1;

  bool operator==(const LayoutSeeds&) const = default;
};

/// Everything needed to reproduce a session: the base model before any
/// command, the analysis configuration and the command log.
struct Project {
  SystemTopology topology;
  Specification spec;
  std::string corpus_path;    // empty for no corpus; relative paths resolve against the bundle
  std::string corpus_sha256;  // hex digest of the snapshot file
  MatchConfig match_config;
  SurfacePolicy surface_policy;
  LayoutSeeds seeds;
  int layout_iterations = 500;
  std::vector<Command> log;

  bool operator==(const Project&) const = default;
};

enum class Pane { topology, spec, av };

std::string_view to_string(Pane pane);
std::optional<Pane> parse_pane(std::string_view text);

struct SelectionItem {
  Pane pane;
  std::string id;

  auto operator<=>(const SelectionItem&) const = default;
};

struct PanePositions {
  Positions topology;
  Positions spec;
  Positions av;

  bool operator==(const PanePositions&) const = default;
};

/// One immutable state of a session. Readers hold it by shared_ptr while
/// commands build the next one.
struct SessionSnapshot {
  std::uint64_t version = 0;

  // model
  SystemTopology topology;
  Specification spec;
  Bucket bucket;
  std::vector<Command> log;

  // derived
  MatchMap matches;
  AttackSurface surface;
  AvGraph av;
  PanePositions positions;

  // view
  std::set<SelectionItem> selection;
  std::set<std::string> highlighted;  // topology nodes matching a selected AV vertex
  Query query;
  std::set<std::string> av_view;  // filter result under query and selection
  std::optional<std::vector<std::string>> projected_ids;
  std::optional<ProjectionOverlay> projection;  // recomputed from projected_ids

  /// Explicit filter united with the topology nodes in the selection.
  std::optional<std::set<std::string>> effective_component_filter() const;
  std::set<std::string> selected(Pane pane) const;
};

/// Names of the resources a command changed, as used on the wire.
using Invalidation = std::set<std::string>;

/// Single-writer session over a shared immutable corpus. Commands are
/// serialized by an internal mutex; snapshot() never blocks on a command.
class Session {
 public:
  /// Runs the full pipeline and replays the project's log. Throws on any
  /// failure; no session exists afterwards.
  Session(Project project, std::shared_ptr<const Corpus> corpus);

  std::shared_ptr<const SessionSnapshot> snapshot() const;
  const Corpus& corpus() const { return *corpus_; }
  std::shared_ptr<const Corpus> corpus_ptr() const { return corpus_; }
  /// The base project with the current log.
  Project project() const;

  Invalidation apply(const Command& command);
  /// Drops the last logged command and rebuilds from the base. Throws
  /// InvalidOperation when the log is empty.
  Invalidation undo();

  /// Adds to the selection. Throws NotFoundError when `id` is not in `pane`.
  Invalidation select(Pane pane, const std::string& id);
  Invalidation clear_selection();
  Invalidation set_query(Query query);
  /// Overlay for the given bucket ids (all bucket rows when empty). Throws
  /// NotFoundError for ids not in the bucket.
  Invalidation project_bucket_rows(std::vector<std::string> ids);
  Invalidation clear_projection();

 private:
  void publish(std::shared_ptr<SessionSnapshot> next);
  std::shared_ptr<SessionSnapshot> next_from_current() const;

  Project base_;
  std::shared_ptr<const Corpus> corpus_;
  std::mutex command_mutex_;
  mutable std::mutex snapshot_mutex_;
  std::shared_ptr<const SessionSnapshot> current_;
};

/// Model and derived state of `project` before any command.
SessionSnapshot initial_state(const Project& project, const Corpus& corpus);

/// Applies `command` to the model fields and recomputes matches, surface, AV
/// graph and bucket rows. Positions and view fields are left stale.
Invalidation apply_command(SessionSnapshot& state, const Command& command, const Corpus& corpus,
                           const Project& project);

void refresh_layouts(SessionSnapshot& state, const Project& project);

/// Prunes stale selection, then recomputes highlight, AV view and projection.
void refresh_views(SessionSnapshot& state, const Corpus& corpus);

}  // namespace cpsec
