#include "cpsec/report.hpp"

#include <nlohmann/json.hpp>
#include <sstream>

namespace cpsec {

using nlohmann::json;

namespace {

struct TargetChains {
  std::string target;
  ChainResult result;
};

struct ReportData {
  std::vector<std::string> surface;
  std::vector<TargetChains> chains;
  std::vector<ViolationTrace> traces;
};

ReportData collect(const SessionSnapshot& s, const ChainLimits& limits) {
  ReportData data;
  data.surface.assign(s.surface.node_ids.begin(), s.surface.node_ids.end());
  for (const auto& id : s.selected(Pane::topology)) {
    if (!s.topology.find_node(id)) continue;
    data.chains.push_back({id, exploit_chains(s.topology, s.matches, s.surface, id, limits)});
  }
  std::set<std::string> violated;
  for (const auto& row : s.bucket.rows) violated.insert(row.violated_components.begin(), row.violated_components.end());
  std::set<std::string> origins;
  for (const auto& node : s.spec.nodes)
    if (node.level == SpecLevel::component_ref && node.component_id && violated.contains(*node.component_id))
      origins.insert(node.id);
  for (const auto& origin : origins) data.traces.push_back(violation_trace(s.spec, origin));
  return data;
}

std::string json_report(const SessionSnapshot& s, const ReportData& data) {
  json doc;
  doc["format"] = "cpsec-report";
  doc["surface"] = data.surface;
  json chains = json::array();
  for (const auto& t : data.chains) {
    json list = json::array();
    for (const auto& c : t.result.chains) list.push_back({{"nodes", c.nodes}, {"edges", c.edges}});
    chains.push_back({{"target", t.target}, {"truncated", t.result.truncated}, {"chains", std::move(list)}});
  }
  doc["chains"] = std::move(chains);
  json traces = json::array();
  for (const auto& t : data.traces)
    traces.push_back({{"origin", t.origin}, {"upward", t.upward}, {"downward", t.downward}});
  doc["traces"] = std::move(traces);
  doc["bucket"] = json::parse(bucket_export(s.bucket, "json"));
  json log = json::array();
  for (const auto& command : s.log) log.push_back(json::parse(encode_command(command)));
  doc["edit_log"] = std::move(log);
  return doc.dump(2) + "\n";
}

std::string join(const std::set<std::string>& ids) {
  std::string out;
  for (const auto& id : ids) {
    if (!out.empty()) out += ", ";
    out += id;
  }
  return out.empty() ? "(none)" : out;
}

std::string markdown_report(const SessionSnapshot& s, const ReportData& data) {
  std::ostringstream out;
  out << "# Security analysis report\n\n## Attack surface\n\n";
  if (data.surface.empty()) out << "(none)\n";
  for (const auto& id : data.surface) out << "- " << id << "\n";

  out << "\n## Exploit chains\n\n";
  if (data.chains.empty()) out << "(no target selected)\n";
  for (const auto& t : data.chains) {
    out << "### " << t.target << "\n\n"
        << t.result.chains.size() << " chain(s)" << (t.result.truncated ? ", truncated" : "") << "\n\n";
    for (const auto& c : t.result.chains) {
      out << "- " << c.nodes.front();
      for (std::size_t i = 0; i < c.edges.size(); ++i) out << " -[" << c.edges[i] << "]-> " << c.nodes[i + 1];
      out << "\n";
    }
    out << "\n";
  }

  out << "\n## Violation traces\n\n";
  if (data.traces.empty()) out << "(none)\n";
  for (const auto& t : data.traces)
    out << "### " << t.origin << "\n\n- upward: " << join(t.upward) << "\n- downward: " << join(t.downward) << "\n\n";

  out << "\n## Bucket\n\n```csv\n" << bucket_export(s.bucket, "csv") << "```\n\n## Edit log\n\n";
  if (s.log.empty()) out << "(empty)\n";
  for (std::size_t i = 0; i < s.log.size(); ++i) out << i + 1 << ". `" << encode_command(s.log[i]) << "`\n";
  return out.str();
}

}  // namespace

std::string run_report(const SessionSnapshot& snapshot, std::string_view format,
                       const ChainLimits& limits) {
  if (format != "json" && format != "markdown")
    throw InvalidOperation("unsupported report format \"" + std::string(format) + "\"");
  const ReportData data = collect(snapshot, limits);
  return format == "json" ? json_report(snapshot, data) : markdown_report(snapshot, data);
}

}  // namespace cpsec
