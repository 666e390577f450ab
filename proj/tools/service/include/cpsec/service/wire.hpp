#pragma once

// JSON shapes of the session resources, shared by the HTTP API and the CLI.

#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "cpsec/analysis.hpp"
#include "cpsec/corpus.hpp"
#include "cpsec/session.hpp"

namespace cpsec::service {

template <class Range>
nlohmann::json strings(const Range& range) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& s : range) out.push_back(s);
  return out;
}

nlohmann::json diagnostics_json(const std::vector<Diagnostic>& diagnostics);
nlohmann::json topology_json(const SessionSnapshot& s);
nlohmann::json spec_json(const SessionSnapshot& s);
nlohmann::json match_set_json(const MatchSet& set);
nlohmann::json matches_json(const SessionSnapshot& s);
nlohmann::json av_graph_json(const SessionSnapshot& s, const Corpus& corpus);
nlohmann::json av_view_json(const SessionSnapshot& s);
nlohmann::json positions_json(const SessionSnapshot& s);
nlohmann::json selection_json(const SessionSnapshot& s);
nlohmann::json edit_log_json(const SessionSnapshot& s);
nlohmann::json projection_json(const SessionSnapshot& s);
nlohmann::json entry_json(const AttackEntry& e);
nlohmann::json trace_json(const ViolationTrace& t);
nlohmann::json chains_json(const std::string& target, const ChainResult& result);

}  // namespace cpsec::service
