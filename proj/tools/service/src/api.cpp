#include "cpsec/service/api.hpp"

#include <charconv>
#include <chrono>
#include <condition_variable>
#include <nlohmann/json.hpp>
#include <thread>

#include "cpsec/bundle.hpp"
#include "cpsec/report.hpp"
#include "cpsec/service/wire.hpp"

namespace cpsec::service {

using nlohmann::json;

namespace {

Response json_response(int status, const json& body) { return {status, "application/json", body.dump()}; }

Response error_response(int status, std::string_view type, const std::string& message,
                        const std::vector<Diagnostic>* diagnostics = nullptr) {
  json error = {{"type", type}, {"message", message}};
  if (diagnostics) error["diagnostics"] = diagnostics_json(*diagnostics);
  return json_response(status, {{"error", std::move(error)}});
}

const std::string& required_param(const std::map<std::string, std::string>& query, const std::string& name) {
  auto it = query.find(name);
  if (it == query.end() || it->second.empty()) throw ParseError("missing query parameter \"" + name + "\"");
  return it->second;
}

std::size_t size_param(const std::map<std::string, std::string>& query, const std::string& name,
                       std::size_t fallback) {
  auto it = query.find(name);
  if (it == query.end() || it->second.empty()) return fallback;
  if (it->second == "unlimited") return ChainLimits::unlimited;
  std::size_t value = 0;
  auto [ptr, ec] = std::from_chars(it->second.data(), it->second.data() + it->second.size(), value);
  if (ec != std::errc() || ptr != it->second.data() + it->second.size())
    throw ParseError("query parameter \"" + name + "\" must be a non-negative integer");
  return value;
}

/// Runs `work` with a stop token that fires on `outer` or after `timeout`.
template <class F>
auto with_deadline(std::stop_token outer, std::chrono::milliseconds timeout, F&& work) {
  std::stop_source source;
  std::stop_callback forward(outer, [&source] { source.request_stop(); });
  std::jthread timer;
  if (timeout.count() > 0) {
    timer = std::jthread([&source, timeout](std::stop_token done) {
      std::mutex m;
      std::condition_variable_any cv;
      std::unique_lock lock(m);
      cv.wait_for(lock, done, timeout, [] { return false; });
      if (!done.stop_requested()) source.request_stop();
    });
  }
  return work(source.get_token());
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string percent_decode(std::string_view text, bool plus_as_space) {
  std::string out;
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '%' && i + 2 < text.size()) {
      int hi = hex_value(text[i + 1]);
      int lo = hex_value(text[i + 2]);
      if (hi >= 0 && lo >= 0) {
        out.push_back(static_cast<char>(hi * 16 + lo));
        i += 2;
        continue;
      }
    }
    out.push_back(plus_as_space && text[i] == '+' ? ' ' : text[i]);
  }
  return out;
}

std::vector<std::string> split_path(std::string_view path) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    std::size_t end = path.find('/', start);
    if (end == std::string_view::npos) end = path.size();
    if (end > start) parts.push_back(percent_decode(path.substr(start, end - start), false));
    start = end + 1;
  }
  return parts;
}

json parse_body(std::string_view body) {
  if (body.empty()) return json::object();
  try {
    json doc = json::parse(body);
    if (!doc.is_object()) throw ParseError("request body must be a JSON object");
    return doc;
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("request body: ") + e.what());
  }
}

Query query_from_json(const json& doc) {
  std::string pattern = doc.value("pattern", std::string());
  std::set<QueryField> fields;
  if (doc.contains("fields"))
    for (const auto& f : doc.at("fields")) {
      auto field = parse_query_field(f.get<std::string>());
      if (!field) throw ParseError("unknown query field \"" + f.get<std::string>() + "\"");
      fields.insert(*field);
    }
  std::optional<std::set<std::string>> filter;
  if (doc.contains("component_filter") && !doc.at("component_filter").is_null())
    filter = doc.at("component_filter").get<std::set<std::string>>();
  return Query(std::move(pattern), std::move(fields), std::move(filter), doc.value("bucket_only", false));
}

}  // namespace

std::pair<std::string, std::map<std::string, std::string>> split_target(std::string_view target) {
  std::map<std::string, std::string> query;
  const std::size_t mark = target.find('?');
  std::string_view path = target.substr(0, mark);
  if (mark != std::string_view::npos) {
    std::string_view rest = target.substr(mark + 1);
    while (!rest.empty()) {
      const std::size_t amp = rest.find('&');
      std::string_view pair = rest.substr(0, amp);
      const std::size_t eq = pair.find('=');
      std::string key = percent_decode(pair.substr(0, eq), true);
      std::string value = eq == std::string_view::npos ? std::string() : percent_decode(pair.substr(eq + 1), true);
      if (!key.empty()) query[std::move(key)] = std::move(value);
      if (amp == std::string_view::npos) break;
      rest = rest.substr(amp + 1);
    }
  }
  return {std::string(path), std::move(query)};
}

void Api::set_listener(Listener listener) {
  std::lock_guard lock(mutex_);
  listener_ = std::move(listener);
}

std::string Api::add_session(std::unique_ptr<Session> session, std::filesystem::path bundle) {
  std::lock_guard lock(mutex_);
  std::string id = "s" + std::to_string(next_id_++);
  sessions_.emplace(id, Entry{std::shared_ptr<Session>(std::move(session)), std::move(bundle)});
  return id;
}

bool Api::has_session(const std::string& id) const {
  std::lock_guard lock(mutex_);
  return sessions_.contains(id);
}

Api::Entry Api::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) throw NotFoundError(id);
  return it->second;
}

void Api::notify(const std::string& id, const Invalidation& invalidated) {
  Listener listener;
  {
    std::lock_guard lock(mutex_);
    listener = listener_;
  }
  if (listener && !invalidated.empty()) listener(id, invalidated);
}

Response Api::handle(std::string_view method, std::string_view target, std::string_view body, std::stop_token stop) {
  try {
    return route(method, target, body, stop);
  } catch (const ParseError& e) {
    return error_response(400, "parse_error", e.what());
  } catch (const ValidationError& e) {
    return error_response(422, "validation_error", e.what(), &e.diagnostics());
  } catch (const NotFoundError& e) {
    return error_response(404, "not_found", e.what());
  } catch (const InvalidOperation& e) {
    return error_response(409, "invalid_operation", e.what());
  } catch (const IoError& e) {
    return error_response(500, "io_error", e.what());
  } catch (const json::exception& e) {
    return error_response(400, "parse_error", e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal_error", e.what());
  }
}

Response Api::route(std::string_view method, std::string_view target, std::string_view body, std::stop_token stop) {
  auto [path, query] = split_target(target);
  const auto parts = split_path(path);
  if (parts.size() < 2 || parts[0] != "api" || parts[1] != "sessions")
    return error_response(404, "not_found", "no route for " + path);

  if (parts.size() == 2) {
    if (method == "GET") {
      std::lock_guard lock(mutex_);
      json ids = json::array();
      for (const auto& [id, entry] : sessions_) ids.push_back(id);
      return json_response(200, {{"sessions", std::move(ids)}});
    }
    if (method == "POST") {
      const json doc = parse_body(body);
      const std::filesystem::path bundle = doc.at("bundle").get<std::string>();
      auto loaded = load_session(bundle);
      const std::string id = add_session(std::move(loaded.session), bundle);
      return json_response(201, {{"session", id}, {"diagnostics", diagnostics_json(loaded.diagnostics)}});
    }
    return error_response(405, "method_not_allowed", std::string(method) + " " + path);
  }

  const std::string& id = parts[2];
  if (parts.size() == 3) {
    if (method != "DELETE") return error_response(405, "method_not_allowed", std::string(method) + " " + path);
    {
      std::lock_guard lock(mutex_);
      if (sessions_.erase(id) == 0) throw NotFoundError(id);
    }
    notify(id, {"session"});
    return json_response(200, {{"ok", true}});
  }
  if (parts.size() != 4) return error_response(404, "not_found", "no route for " + path);

  const Entry entry = find(id);
  const std::string& leaf = parts[3];
  if (method == "GET") return get_resource(entry, leaf, query, stop);
  if (method != "POST") return error_response(405, "method_not_allowed", std::string(method) + " " + path);
  if (leaf == "commands") return post_command(id, entry, body);
  if (leaf == "save") {
    const json doc = parse_body(body);
    std::filesystem::path file = entry.bundle;
    if (doc.contains("path")) file = doc.at("path").get<std::string>();
    if (file.empty()) throw InvalidOperation("session has no bundle path; pass \"path\"");
    save_session(*entry.session, file);
    return json_response(200, {{"ok", true}, {"path", file.string()}});
  }
  return error_response(404, "not_found", "no route for " + path);
}

Response Api::get_resource(const Entry& entry, std::string_view resource,
                           const std::map<std::string, std::string>& query, std::stop_token stop) {
  const auto snapshot = entry.session->snapshot();
  const SessionSnapshot& s = *snapshot;
  const Corpus& corpus = entry.session->corpus();

  if (resource == "topology") return json_response(200, topology_json(s));
  if (resource == "spec") return json_response(200, spec_json(s));
  if (resource == "matches") return json_response(200, matches_json(s));
  if (resource == "surface") return json_response(200, {{"version", s.version}, {"nodes", strings(s.surface.node_ids)}});
  if (resource == "av-graph") return json_response(200, av_graph_json(s, corpus));
  if (resource == "av-view") return json_response(200, av_view_json(s));
  if (resource == "positions") return json_response(200, positions_json(s));
  if (resource == "bucket") return {200, "application/json", bucket_export(s.bucket, "json")};
  if (resource == "selection") return json_response(200, selection_json(s));
  if (resource == "edit-log") return json_response(200, edit_log_json(s));
  if (resource == "projection") return json_response(200, projection_json(s));
  if (resource == "chains") {
    const std::string& target = required_param(query, "target");
    ChainLimits limits;
    limits.max_depth = size_param(query, "max_depth", limits.max_depth);
    limits.max_chains = size_param(query, "max_chains", limits.max_chains);
    const auto timeout = std::chrono::milliseconds(size_param(query, "timeout_ms", 0));
    ChainResult result = with_deadline(stop, timeout, [&](std::stop_token token) {
      return exploit_chains(s.topology, s.matches, s.surface, target, limits, token);
    });
    return json_response(200, chains_json(target, result));
  }
  if (resource == "trace") return json_response(200, trace_json(violation_trace(s.spec, required_param(query, "origin"))));
  if (resource == "entry") {
    const std::string& native_id = required_param(query, "id");
    const AttackEntry* e = corpus.find(native_id);
    if (!e) throw NotFoundError(native_id);
    return json_response(200, entry_json(*e));
  }
  if (resource == "report") {
    auto it = query.find("format");
    const std::string format = it == query.end() ? "json" : it->second;
    std::string body = run_report(s, format);
    return {200, format == "json" ? "application/json" : "text/markdown; charset=utf-8", std::move(body)};
  }
  if (resource == "bucket-export") {
    auto it = query.find("format");
    const std::string format = it == query.end() ? "csv" : it->second;
    std::string body = bucket_export(s.bucket, format);
    return {200, format == "csv" ? "text/csv; charset=utf-8" : "application/json", std::move(body)};
  }
  return error_response(404, "not_found", "unknown resource " + std::string(resource));
}

Response Api::post_command(const std::string& id, const Entry& entry, std::string_view body) {
  const json doc = parse_body(body);
  const std::string op = doc.at("op").get<std::string>();
  Session& session = *entry.session;
  Invalidation invalidated;
  if (op == "select") {
    const auto pane = parse_pane(doc.at("pane").get<std::string>());
    if (!pane) throw ParseError("unknown pane \"" + doc.at("pane").get<std::string>() + "\"");
    invalidated = session.select(*pane, doc.at("id").get<std::string>());
  } else if (op == "clear_selection") {
    invalidated = session.clear_selection();
  } else if (op == "filter") {
    invalidated = session.set_query(query_from_json(doc));
  } else if (op == "project") {
    invalidated = session.project_bucket_rows(doc.value("ids", std::vector<std::string>{}));
  } else if (op == "clear_projection") {
    invalidated = session.clear_projection();
  } else if (op == "undo") {
    invalidated = session.undo();
  } else {
    invalidated = session.apply(decode_command(body));
  }
  notify(id, invalidated);
  return json_response(200, {{"ok", true}, {"version", session.snapshot()->version}, {"invalidated", strings(invalidated)}});
}

}  // namespace cpsec::service
