#include <CLI11.hpp>
#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

#include "cpsec/bundle.hpp"
#include "cpsec/report.hpp"
#include "cpsec/service/api.hpp"
#include "cpsec/service/server.hpp"
#include "cpsec/service/wire.hpp"

namespace {

using namespace cpsec;
namespace fs = std::filesystem;

struct Inputs {
  std::string bundle;
  std::string topology;
  std::string spec;
  std::string corpus;
  std::optional<std::uint64_t> seed;
};

void add_inputs(CLI::App& cmd, Inputs& in) {
  cmd.add_option("--bundle", in.bundle, "project bundle");
  cmd.add_option("--topology", in.topology, "system topology GraphML");
  cmd.add_option("--spec", in.spec, "specification GraphML");
  cmd.add_option("--corpus", in.corpus, "corpus snapshot written by ingest");
  cmd.add_option("--seed", in.seed, "layout seed");
}

struct Loaded {
  Project project;
  std::shared_ptr<const Corpus> corpus;
  std::optional<RecordedState> recorded;
};

Loaded load_inputs(const Inputs& in) {
  Loaded out;
  if (!in.bundle.empty()) {
    if (!in.topology.empty() || !in.spec.empty() || !in.corpus.empty())
      throw InvalidOperation("--bundle cannot be combined with --topology, --spec or --corpus");
    BundleContents contents = read_bundle(in.bundle);
    for (const auto& d : contents.diagnostics) std::cerr << to_string(d) << "\n";
    out.project = std::move(contents.project);
    out.recorded = std::move(contents.recorded);
  } else {
    if (in.topology.empty() || in.spec.empty()) throw InvalidOperation("either --bundle or --topology and --spec is required");
    out.project = new_project(in.topology, in.spec,
                              in.corpus.empty() ? std::nullopt : std::optional<fs::path>(in.corpus));
  }
  if (in.seed) out.project.seeds = {*in.seed, *in.seed};
  out.corpus = load_project_corpus(out.project);
  return out;
}

/// Model state after replaying the log, without layouts.
SessionSnapshot analyse(const Loaded& loaded) {
  Project base = loaded.project;
  base.log.clear();
  SessionSnapshot state = initial_state(base, *loaded.corpus);
  for (const auto& command : loaded.project.log) apply_command(state, command, *loaded.corpus, base);
  return state;
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("cannot write " + path);
}

std::string chain_line(const ExploitChain& chain) {
  std::string line = chain.nodes.front();
  for (std::size_t i = 0; i < chain.edges.size(); ++i) line += " -[" + chain.edges[i] + "]-> " + chain.nodes[i + 1];
  return line;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Attack-vector analysis for cyber-physical system models"};
  app.require_subcommand(1);

  // ingest
  std::vector<std::string> capec_files, cwe_files, nvd_files;
  std::string ingest_out;
  auto* ingest = app.add_subcommand("ingest", "build a corpus snapshot from CAPEC, CWE and NVD files");
  ingest->add_option("--capec", capec_files, "CAPEC XML catalog")->check(CLI::ExistingFile);
  ingest->add_option("--cwe", cwe_files, "CWE XML catalog")->check(CLI::ExistingFile);
  ingest->add_option("--nvd", nvd_files, "NVD JSON 1.1 feed, optionally gzipped")->check(CLI::ExistingFile);
  ingest->add_option("-o,--output", ingest_out, "snapshot file")->required();

  // bundle
  Inputs bundle_in;
  std::string bundle_out;
  auto* bundle = app.add_subcommand("bundle", "write a project bundle");
  bundle->add_option("--topology", bundle_in.topology, "system topology GraphML")->required();
  bundle->add_option("--spec", bundle_in.spec, "specification GraphML")->required();
  bundle->add_option("--corpus", bundle_in.corpus, "corpus snapshot");
  bundle->add_option("--seed", bundle_in.seed, "layout seed");
  bundle->add_option("-o,--output", bundle_out, "bundle file")->required();

  // match
  Inputs match_in;
  bool match_json = false;
  auto* match = app.add_subcommand("match", "print attack-vector evidence per topology element");
  add_inputs(*match, match_in);
  match->add_flag("--json", match_json, "JSON output");

  // surface
  Inputs surface_in;
  bool surface_json = false;
  auto* surface = app.add_subcommand("surface", "print the attack surface");
  add_inputs(*surface, surface_in);
  surface->add_flag("--json", surface_json, "JSON output");

  // chains
  Inputs chains_in;
  std::string chains_target;
  std::size_t max_depth = ChainLimits{}.max_depth;
  std::size_t max_chains = ChainLimits{}.max_chains;
  bool chains_json = false;
  auto* chains = app.add_subcommand("chains", "enumerate exploit chains to a target component");
  add_inputs(*chains, chains_in);
  chains->add_option("--target", chains_target, "target node id")->required();
  chains->add_option("--max-depth", max_depth, "maximum edges per chain");
  chains->add_option("--max-chains", max_chains, "maximum number of chains");
  chains->add_flag("--json", chains_json, "JSON output");

  // report
  Inputs report_in;
  std::string report_format = "markdown";
  std::vector<std::string> report_targets;
  std::string report_out;
  auto* report = app.add_subcommand("report", "write the analysis report");
  add_inputs(*report, report_in);
  report->add_option("--format", report_format, "json or markdown");
  report->add_option("--target", report_targets, "topology node to compute exploit chains for");
  report->add_option("-o,--output", report_out, "output file (default stdout)");

  // serve
  std::vector<std::string> serve_bundles;
  std::string address = "127.0.0.1";
  std::uint16_t port = 8080;
  unsigned threads = 4;
  auto* serve = app.add_subcommand("serve", "serve the session API over HTTP and WebSocket");
  serve->add_option("--bundle", serve_bundles, "bundle to open at startup")->check(CLI::ExistingFile);
  serve->add_option("--address", address, "listen address");
  serve->add_option("--port", port, "listen port (0 picks one)");
  serve->add_option("--threads", threads, "worker threads");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  try {
    if (*ingest) {
      std::vector<AttackEntry> entries;
      std::size_t warnings = 0;
      auto take = [&](Parsed<std::vector<AttackEntry>> parsed, const std::string& file) {
        for (const auto& d : parsed.diagnostics) std::cerr << file << ": " << to_string(d) << "\n";
        warnings += parsed.diagnostics.size();
        std::move(parsed.value.begin(), parsed.value.end(), std::back_inserter(entries));
      };
      auto parse_file = [&](const std::string& file, auto parser) {
        try {
          take(parser(read_feed_file(file)), file);
        } catch (const ParseError& e) {
          throw ParseError(file + ": " + e.what(), e.line());
        }
      };
      for (const auto& f : capec_files) parse_file(f, parse_capec);
      for (const auto& f : cwe_files) parse_file(f, parse_cwe);
      for (const auto& f : nvd_files) parse_file(f, parse_nvd_feed);
      const Corpus corpus = build_corpus(std::move(entries));
      for (const auto& d : corpus.diagnostics()) std::cerr << to_string(d) << "\n";
      save_snapshot(corpus, fs::path(ingest_out));
      std::cerr << "ingested " << corpus.size() << " entries (capec " << corpus.count(Source::capec) << ", cwe "
                << corpus.count(Source::cwe) << ", cve " << corpus.count(Source::cve) << "), "
                << warnings + corpus.diagnostics().size() << " warnings\n";
      return 0;
    }
    if (*bundle) {
      Project project = new_project(bundle_in.topology, bundle_in.spec,
                                    bundle_in.corpus.empty() ? std::nullopt : std::optional<fs::path>(bundle_in.corpus));
      if (bundle_in.seed) project.seeds = {*bundle_in.seed, *bundle_in.seed};
      // construct once so an unloadable project never produces a bundle
      Session session(project, load_project_corpus(project));
      save_session(session, bundle_out);
      return 0;
    }
    if (*match) {
      const SessionSnapshot s = analyse(load_inputs(match_in));
      if (match_json) {
        std::cout << service::matches_json(s).dump(2) << "\n";
      } else {
        for (const auto* side : {&s.matches.node_matches, &s.matches.edge_matches})
          for (const auto& [id, set] : *side)
            for (const auto& m : set) std::cout << id << "\t" << m.native_id << "\t" << m.key << "\t" << m.term << "\n";
      }
      return 0;
    }
    if (*surface) {
      const SessionSnapshot s = analyse(load_inputs(surface_in));
      if (surface_json)
        std::cout << nlohmann::json{{"nodes", service::strings(s.surface.node_ids)}}.dump(2) << "\n";
      else
        for (const auto& id : s.surface.node_ids) std::cout << id << "\n";
      return 0;
    }
    if (*chains) {
      const SessionSnapshot s = analyse(load_inputs(chains_in));
      const ChainResult result =
          exploit_chains(s.topology, s.matches, s.surface, chains_target, ChainLimits{max_depth, max_chains});
      if (chains_json) {
        std::cout << service::chains_json(chains_target, result).dump(2) << "\n";
      } else {
        for (const auto& c : result.chains) std::cout << chain_line(c) << "\n";
        if (result.truncated) std::cerr << "output truncated by --max-depth or --max-chains\n";
      }
      return 0;
    }
    if (*report) {
      SessionSnapshot s = analyse(load_inputs(report_in));
      for (const auto& id : report_targets) {
        if (!s.topology.find_node(id)) throw NotFoundError(id);
        s.selection.insert({Pane::topology, id});
      }
      write_output(report_out, run_report(s, report_format));
      return 0;
    }
    if (*serve) {
      service::Api api;
      for (const auto& file : serve_bundles) {
        auto loaded = load_session(file);
        for (const auto& d : loaded.diagnostics) std::cerr << file << ": " << to_string(d) << "\n";
        std::cout << "session " << api.add_session(std::move(loaded.session), file) << " <- " << file << "\n";
      }
      service::Server server(api, address, port, threads);
      std::cout << "listening on http://" << address << ":" << server.port() << std::endl;
      server.run();
      return 0;
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    for (const auto& d : e.diagnostics()) std::cerr << "  " << to_string(d) << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what();
    if (e.line() > 0) std::cerr << " (line " << e.line() << ")";
    std::cerr << "\n";
    return 1;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
