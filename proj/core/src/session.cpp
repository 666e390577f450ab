#include "cpsec/session.hpp"

#include <algorithm>
#include <nlohmann/json.hpp>

namespace cpsec {

using nlohmann::json;

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

std::string require_string(const json& doc, const char* key) {
  auto it = doc.find(key);
  if (it == doc.end() || !it->is_string()) throw ParseError(std::string("command field \"") + key + "\" must be a string");
  return it->get<std::string>();
}

}  // namespace

std::string encode_command(const Command& command) {
  json doc = std::visit(
      Overloaded{
          [](const EditCommand& c) {
            return json{{"op", "edit"},
                        {"element", c.edit.element},
                        {"action", c.edit.action == AttributeEdit::Action::add ? "add" : "remove"},
                        {"key", c.edit.key},
                        {"value", c.edit.value}};
          },
          [](const DeleteCommand& c) { return json{{"op", "delete"}, {"ids", c.ids}}; },
          [](const ExpandCommand& c) { return json{{"op", "expand"}, {"id", c.cwe}}; },
          [](const BucketAddCommand& c) { return json{{"op", "bucket_add"}, {"id", c.native_id}}; },
          [](const BucketRemoveCommand& c) { return json{{"op", "bucket_remove"}, {"id", c.native_id}}; },
          [](const ResetDeletionsCommand&) { return json{{"op", "reset_deletions"}}; },
      },
      command);
  return doc.dump();
}

Command decode_command(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("command: ") + e.what());
  }
  if (!doc.is_object()) throw ParseError("command must be a JSON object");
  const std::string op = require_string(doc, "op");
  if (op == "edit") {
    AttributeEdit edit;
    edit.element = require_string(doc, "element");
    const std::string action = require_string(doc, "action");
    if (action == "add")
      edit.action = AttributeEdit::Action::add;
    else if (action == "remove")
      edit.action = AttributeEdit::Action::remove;
    else
      throw ParseError("edit action must be \"add\" or \"remove\"");
    edit.key = require_string(doc, "key");
    edit.value = require_string(doc, "value");
    return EditCommand{std::move(edit)};
  }
  if (op == "delete") {
    auto it = doc.find("ids");
    if (it == doc.end() || !it->is_array()) throw ParseError("delete needs an \"ids\" array");
    DeleteCommand c;
    for (const auto& id : *it) {
      if (!id.is_string()) throw ParseError("delete ids must be strings");
      c.ids.push_back(id.get<std::string>());
    }
    return c;
  }
  if (op == "expand") return ExpandCommand{require_string(doc, "id")};
  if (op == "bucket_add") return BucketAddCommand{require_string(doc, "id")};
  if (op == "bucket_remove") return BucketRemoveCommand{require_string(doc, "id")};
  if (op == "reset_deletions") return ResetDeletionsCommand{};
  throw ParseError("unknown command op \"" + op + "\"");
}

std::string_view to_string(Pane pane) {
  switch (pane) {
    case Pane::topology: return "topology";
    case Pane::spec: return "spec";
    case Pane::av: return "av";
  }
  return "topology";
}

std::optional<Pane> parse_pane(std::string_view text) {
  for (auto p : {Pane::topology, Pane::spec, Pane::av})
    if (to_string(p) == text) return p;
  return std::nullopt;
}

std::set<std::string> SessionSnapshot::selected(Pane pane) const {
  std::set<std::string> out;
  for (const auto& item : selection)
    if (item.pane == pane) out.insert(item.id);
  return out;
}

std::optional<std::set<std::string>> SessionSnapshot::effective_component_filter() const {
  std::set<std::string> nodes;
  for (const auto& item : selection)
    if (item.pane == Pane::topology && topology.find_node(item.id)) nodes.insert(item.id);
  if (!query.component_filter() && nodes.empty()) return std::nullopt;
  if (query.component_filter()) nodes.insert(query.component_filter()->begin(), query.component_filter()->end());
  return nodes;
}

SessionSnapshot initial_state(const Project& project, const Corpus& corpus) {
  project.match_config.validate();
  auto diagnostics = validate(project.topology);
  if (has_errors(diagnostics)) throw ValidationError(std::move(diagnostics));
  diagnostics = validate(project.spec, &project.topology);
  if (has_errors(diagnostics)) throw ValidationError(std::move(diagnostics));

  SessionSnapshot state;
  state.topology = project.topology;
  state.spec = project.spec;
  state.matches = match_system(state.topology, corpus, project.match_config);
  state.surface = attack_surface(state.topology, state.matches, project.surface_policy);
  state.av = build_av_graph(state.matches, corpus);
  return state;
}

Invalidation apply_command(SessionSnapshot& state, const Command& command, const Corpus& corpus,
                           const Project& project) {
  Invalidation changed = std::visit(
      Overloaded{
          [&](const EditCommand& c) -> Invalidation {
            state.topology = apply_attribute_edit(state.topology, c.edit);
            state.matches =
                rematch_incremental(std::move(state.matches), state.topology, c.edit.element, corpus, project.match_config);
            state.surface = attack_surface(state.topology, state.matches, project.surface_policy);
            state.av = rebuild_av_graph(state.matches, corpus, state.av.deleted, state.av.expanded);
            state.bucket = bucket_refresh(state.bucket, state.matches, corpus);
            return {"topology", "matches", "surface", "av-graph", "av-view", "positions", "bucket", "chains",
                    "projection", "report"};
          },
          [&](const DeleteCommand& c) -> Invalidation {
            state.av = delete_vertices(std::move(state.av), c.ids);
            return {"av-graph", "av-view", "positions", "projection", "selection"};
          },
          [&](const ExpandCommand& c) -> Invalidation {
            state.av = expand_vertex(std::move(state.av), c.cwe);
            return {"av-graph", "av-view", "positions"};
          },
          [&](const BucketAddCommand& c) -> Invalidation {
            state.bucket = bucket_add(std::move(state.bucket), c.native_id, state.matches, corpus);
            return {"bucket", "av-view", "report"};
          },
          [&](const BucketRemoveCommand& c) -> Invalidation {
            state.bucket = bucket_remove(std::move(state.bucket), c.native_id);
            return {"bucket", "av-view", "projection", "report"};
          },
          [&](const ResetDeletionsCommand&) -> Invalidation {
            state.av = rebuild_av_graph(state.matches, corpus, {}, state.av.expanded);
            return {"av-graph", "av-view", "positions", "projection"};
          },
      },
      command);
  state.log.push_back(command);
  changed.insert("edit-log");
  return changed;
}

void refresh_layouts(SessionSnapshot& state, const Project& project) {
  std::vector<std::string> ids;
  std::vector<std::pair<std::string, std::string>> links;
  for (const auto& node : state.topology.nodes) ids.push_back(node.id);
  for (const auto& edge : state.topology.edges) links.emplace_back(edge.source, edge.target);
  LayoutParams topology_params(project.seeds.topology);
  topology_params.iterations = project.layout_iterations;
  state.positions.topology = fruchterman_reingold(ids, links, topology_params);

  state.positions.spec = banded_hierarchical(state.spec);

  const auto visible = state.av.visible_ids();
  std::vector<std::string> av_ids(visible.begin(), visible.end());
  std::vector<std::pair<std::string, std::string>> av_links(state.av.edges.begin(), state.av.edges.end());
  LayoutParams av_params(project.seeds.av);
  av_params.iterations = project.layout_iterations;
  state.positions.av = fruchterman_reingold(av_ids, av_links, av_params);
}

void refresh_views(SessionSnapshot& state, const Corpus& corpus) {
  const auto visible = state.av.visible_ids();
  std::erase_if(state.selection, [&](const SelectionItem& item) {
    switch (item.pane) {
      case Pane::topology: return !state.topology.has_element(item.id);
      case Pane::spec: return state.spec.find_node(item.id) == nullptr;
      case Pane::av: return !visible.contains(item.id);
    }
    return true;
  });

  state.highlighted.clear();
  const auto av_selected = state.selected(Pane::av);
  if (!av_selected.empty()) {
    for (const auto& [node, matches] : state.matches.node_matches)
      for (const auto& m : matches)
        if (av_selected.contains(m.native_id)) {
          state.highlighted.insert(node);
          break;
        }
  }

  const Query effective = state.query.with_component_filter(state.effective_component_filter());
  state.av_view = filter_av(state.av, effective, state.matches, state.bucket, corpus);

  if (state.projected_ids) {
    const auto matched = state.matches.all_ids();
    std::erase_if(*state.projected_ids, [&](const std::string& id) {
      return !state.bucket.contains(id) || state.av.deleted.contains(id) ||
             (matched.contains(id) && !state.av.vertices.contains(id));
    });
    state.projection = project_bucket(state.topology, state.matches, *state.projected_ids);
  } else {
    state.projection.reset();
  }
}

Session::Session(Project project, std::shared_ptr<const Corpus> corpus)
    : base_(std::move(project)), corpus_(corpus ? std::move(corpus) : std::make_shared<const Corpus>()) {
  const std::vector<Command> log = std::move(base_.log);
  base_.log.clear();
  auto state = std::make_shared<SessionSnapshot>(initial_state(base_, *corpus_));
  for (const auto& command : log) apply_command(*state, command, *corpus_, base_);
  refresh_layouts(*state, base_);
  refresh_views(*state, *corpus_);
  current_ = std::move(state);
}

std::shared_ptr<const SessionSnapshot> Session::snapshot() const {
  std::lock_guard lock(snapshot_mutex_);
  return current_;
}

Project Session::project() const {
  Project out = base_;
  out.log = snapshot()->log;
  return out;
}

void Session::publish(std::shared_ptr<SessionSnapshot> next) {
  std::lock_guard lock(snapshot_mutex_);
  next->version = current_->version + 1;
  current_ = std::move(next);
}

std::shared_ptr<SessionSnapshot> Session::next_from_current() const {
  return std::make_shared<SessionSnapshot>(*snapshot());
}

Invalidation Session::apply(const Command& command) {
  std::lock_guard lock(command_mutex_);
  auto next = next_from_current();
  Invalidation changed = apply_command(*next, command, *corpus_, base_);
  if (changed.contains("positions")) refresh_layouts(*next, base_);
  refresh_views(*next, *corpus_);
  publish(std::move(next));
  return changed;
}

Invalidation Session::undo() {
  std::lock_guard lock(command_mutex_);
  auto current = snapshot();
  if (current->log.empty()) throw InvalidOperation("nothing to undo");
  auto next = std::make_shared<SessionSnapshot>(initial_state(base_, *corpus_));
  for (std::size_t i = 0; i + 1 < current->log.size(); ++i) apply_command(*next, current->log[i], *corpus_, base_);
  next->selection = current->selection;
  next->query = current->query;
  next->projected_ids = current->projected_ids;
  refresh_layouts(*next, base_);
  refresh_views(*next, *corpus_);
  publish(std::move(next));
  return {"topology", "matches", "surface", "av-graph", "av-view", "positions", "bucket", "selection",
          "chains", "projection", "edit-log", "report"};
}

Invalidation Session::select(Pane pane, const std::string& id) {
  std::lock_guard lock(command_mutex_);
  auto next = next_from_current();
  switch (pane) {
    case Pane::topology:
      if (!next->topology.has_element(id)) throw NotFoundError(id);
      next->selection.insert({pane, id});
      break;
    case Pane::spec: {
      const SpecNode* node = next->spec.find_node(id);
      if (!node) throw NotFoundError(id);
      next->selection.insert({pane, id});
      if (node->component_id && next->topology.find_node(*node->component_id))
        next->selection.insert({Pane::topology, *node->component_id});
      break;
    }
    case Pane::av: {
      auto it = next->av.vertices.find(id);
      if (it == next->av.vertices.end() || !it->second.visible) throw NotFoundError(id);
      next->selection.insert({pane, id});
      break;
    }
  }
  refresh_views(*next, *corpus_);
  publish(std::move(next));
  return {"selection", "av-view"};
}

Invalidation Session::clear_selection() {
  std::lock_guard lock(command_mutex_);
  auto next = next_from_current();
  next->selection.clear();
  refresh_views(*next, *corpus_);
  publish(std::move(next));
  return {"selection", "av-view"};
}

Invalidation Session::set_query(Query query) {
  std::lock_guard lock(command_mutex_);
  auto next = next_from_current();
  next->query = std::move(query);
  refresh_views(*next, *corpus_);
  publish(std::move(next));
  return {"av-view"};
}

Invalidation Session::project_bucket_rows(std::vector<std::string> ids) {
  std::lock_guard lock(command_mutex_);
  auto next = next_from_current();
  if (ids.empty()) ids = next->bucket.ids();
  for (const auto& id : ids)
    if (!next->bucket.contains(id)) throw NotFoundError(id);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  next->projected_ids = std::move(ids);
  refresh_views(*next, *corpus_);
  publish(std::move(next));
  return {"projection"};
}

Invalidation Session::clear_projection() {
  std::lock_guard lock(command_mutex_);
  auto next = next_from_current();
  next->projected_ids.reset();
  refresh_views(*next, *corpus_);
  publish(std::move(next));
  return {"projection"};
}

}  // namespace cpsec
