// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.
//
//   cpsec_acceptance --cli <path to the cpsec executable>

#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <nlohmann/json.hpp>
#include <random>
#include <sstream>

#include "cpsec/bundle.hpp"
#include "cpsec/graphml.hpp"
#include "cpsec/layout.hpp"
#include "cpsec/report.hpp"
#include "cpsec/session.hpp"
#include "test_support.hpp"

namespace {

using namespace cpsec;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

// Tolerances and sizes.
constexpr double kSurfaceBudgetSeconds = 1.0;
constexpr double kAbstractionBudgetSeconds = 10.0;
constexpr std::size_t kRandomChainGraphs = 200;
constexpr int kRandomChainMaxNodes = 10;
constexpr std::size_t kRandomSpecs = 200;
constexpr std::size_t kLayoutSpecs = 100;
constexpr std::size_t kFilterQueries = 1000;
constexpr std::size_t kSyntheticCves = 100000;
constexpr std::size_t kSyntheticCwes = 1000;
constexpr std::size_t kSyntheticCapecs = 500;

const std::set<std::string> kRadios = {"Ground Radio Module", "Imagery Radio Module", "Telemetry Radio Module"};
const std::string kProcessor = "Primary Application Processor";

/// Thrown by `require` with the reason a criterion failed.
struct Unmet : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& what) {
  if (!condition) throw Unmet(what);
}

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt_seconds(double s) {
  std::ostringstream out;
  out.precision(3);
  out << std::fixed << s << " s";
  return out.str();
}

struct CommandResult {
  int status;
  std::string out;
};

std::string quote(const std::string& arg) {
  std::string out = "'";
  for (char c : arg) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  return out + "'";
}

CommandResult run_cli(const std::string& cli, const std::vector<std::string>& args) {
  std::string command = quote(cli);
  for (const auto& a : args) command += " " + quote(a);
  command += " 2>/dev/null";
  FILE* pipe = popen(command.c_str(), "r");
  if (!pipe) throw Unmet("cannot run " + command);
  std::string out;
  std::array<char, 4096> buffer;
  while (std::size_t n = std::fread(buffer.data(), 1, buffer.size(), pipe)) out.append(buffer.data(), n);
  const int raw = pclose(pipe);
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, out};
}

std::set<std::string> lines(const std::string& text) {
  std::set<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);)
    if (!line.empty()) out.insert(line);
  return out;
}

struct Context {
  std::string cli;
  testing::TempDir dir;
  fs::path corpus_snapshot;
};

/// CLI ingest of the fixture catalogs, shared by the CLI checks.
fs::path ingest_fixtures(Context& ctx) {
  if (!ctx.corpus_snapshot.empty()) return ctx.corpus_snapshot;
  const auto out = ctx.dir / "uas-corpus.jsonl";
  auto r = run_cli(ctx.cli, {"ingest", "--capec", testing::fixture("uas-capec.xml").string(), "--cwe",
                             testing::fixture("uas-cwe.xml").string(), "--nvd",
                             testing::fixture("uas-nvd.json").string(), "-o", out.string()});
  require(r.status == 0, "cpsec ingest exited with " + std::to_string(r.status));
  ctx.corpus_snapshot = out;
  return out;
}

std::vector<std::string> fixture_inputs(Context& ctx) {
  return {"--topology", testing::fixture("uas-topology.graphml").string(), "--spec",
          testing::fixture("uas-spec.graphml").string(), "--corpus", ingest_fixtures(ctx).string()};
}

std::vector<std::string> concat(std::vector<std::string> a, const std::vector<std::string>& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

// --- criteria ---------------------------------------------------------------

std::string scenario_a(Context& ctx) {
  const auto start = Clock::now();
  std::vector<AttackEntry> entries;
  for (auto parsed : {parse_capec(testing::read_text(testing::fixture("uas-capec.xml"))),
                      parse_cwe(testing::read_text(testing::fixture("uas-cwe.xml"))),
                      parse_nvd_feed(testing::read_text(testing::fixture("uas-nvd.json")))})
    std::move(parsed.value.begin(), parsed.value.end(), std::back_inserter(entries));
  const Corpus corpus = build_corpus(std::move(entries));
  const auto topology = parse_topology_graphml(testing::read_text(testing::fixture("uas-topology.graphml"))).value;
  const auto matches = match_system(topology, corpus, {});
  const auto surface = attack_surface(topology, matches);
  const double elapsed = seconds_since(start);
  require(surface.node_ids == kRadios, "surface differs from the three radio modules");
  require(elapsed < kSurfaceBudgetSeconds, "took " + fmt_seconds(elapsed));

  auto cli = run_cli(ctx.cli, concat({"surface"}, fixture_inputs(ctx)));
  require(cli.status == 0, "cpsec surface exited with " + std::to_string(cli.status));
  require(lines(cli.out) == kRadios, "cpsec surface printed a different set");
  return "surface = 3 radio modules in " + fmt_seconds(elapsed) + " (library) and via CLI";
}

std::string scenario_b(Context&) {
  const auto corpus = testing::uas_corpus();
  auto topology = testing::uas_topology();
  auto incremental = match_system(topology, *corpus, {});
  for (const auto& radio : kRadios) {
    topology = apply_attribute_edit(topology, {radio, AttributeEdit::Action::remove, "protocol", "ZigBee"});
    incremental = rematch_incremental(std::move(incremental), topology, radio, *corpus, {});
  }
  const auto full = match_system(topology, *corpus, {});
  require(incremental == full, "incremental rematch differs from full recompute");
  const auto surface = attack_surface(topology, full);
  for (const auto& radio : kRadios) {
    require(!surface.node_ids.contains(radio), radio + " still on the surface");
    require(!full.node(radio).empty(), radio + " lost all attack vectors");
  }
  return "radios leave the surface, keep evidence; incremental == full";
}

std::string scenario_c(Context& ctx) {
  const auto corpus = testing::uas_corpus();
  const auto topology = testing::uas_topology();
  const auto matches = match_system(topology, *corpus, {});
  const auto surface = attack_surface(topology, matches);
  const auto result = exploit_chains(topology, matches, surface, kProcessor);
  std::map<std::string, int> per_radio;
  for (const auto& chain : result.chains) {
    require(verify_chain(chain, topology, matches, surface), "chain failed verification");
    ++per_radio[chain.nodes.front()];
  }
  for (const auto& radio : kRadios) require(per_radio[radio] >= 1, "no chain from " + radio);

  std::mt19937_64 rng(20240601);
  const ChainLimits unlimited{ChainLimits::unlimited, ChainLimits::unlimited};
  for (std::size_t i = 0; i < kRandomChainGraphs; ++i) {
    auto c = testing::random_chain_case(rng, kRandomChainMaxNodes);
    auto got = exploit_chains(c.topology, c.matches, c.surface, c.target, unlimited);
    require(!got.truncated && got.chains == testing::brute_force_chains(c),
            "random graph " + std::to_string(i) + " differs from the brute-force oracle");
  }

  auto cli = run_cli(ctx.cli, concat({"chains", "--target", kProcessor}, fixture_inputs(ctx)));
  require(cli.status == 0, "cpsec chains exited with " + std::to_string(cli.status));
  std::set<std::string> expected;
  for (const auto& chain : result.chains) {
    std::string line = chain.nodes.front();
    for (std::size_t i = 0; i < chain.edges.size(); ++i) line += " -[" + chain.edges[i] + "]-> " + chain.nodes[i + 1];
    expected.insert(line);
  }
  require(lines(cli.out) == expected, "cpsec chains printed a different chain set");
  return std::to_string(result.chains.size()) + " chains to the processor from all 3 radios; " +
         std::to_string(kRandomChainGraphs) + " random graphs equal the oracle";
}

std::string scenario_d(Context&) {
  const auto spec = testing::uas_spec();
  const auto trace = violation_trace(spec, "Imagery Radio Module");
  for (const char* id : {"CA4.3", "H1", "H2", "H3", "L1", "L2", "L3"})
    require(trace.upward.contains(id), std::string("trace misses ") + id);
  require(trace == testing::closure_trace(spec, "Imagery Radio Module"), "fixture trace differs from closure oracle");

  std::mt19937_64 rng(4242);
  for (std::size_t i = 0; i < kRandomSpecs; ++i) {
    const auto random = testing::random_spec(rng);
    const auto& origin = random.nodes[rng() % random.nodes.size()].id;
    require(violation_trace(random, origin) == testing::closure_trace(random, origin),
            "random spec " + std::to_string(i) + " differs from the closure oracle");
  }
  return "trace reaches CA4.3, H1-H3, L1-L3; " + std::to_string(kRandomSpecs) + " random DAGs equal the oracle";
}

std::string abstraction_bound(Context&) {
  const Corpus corpus = build_corpus(testing::synthetic_entries(kSyntheticCapecs, kSyntheticCwes, kSyntheticCves));
  require(corpus.count(Source::cve) == kSyntheticCves && corpus.count(Source::cwe) == kSyntheticCwes &&
              corpus.count(Source::capec) == kSyntheticCapecs,
          "synthetic corpus lost entries");
  // Worst case: every entry of the corpus is evidence on some component.
  MatchMap matches;
  std::size_t i = 0;
  for (const auto& e : corpus.entries()) matches.node_matches["n" + std::to_string(i++ % 16)].insert({e.native_id, "k", "t"});

  const auto start = Clock::now();
  const AvGraph graph = build_av_graph(matches, corpus);
  const double elapsed = seconds_since(start);
  const std::size_t bound = kSyntheticCapecs + kSyntheticCwes + 1;
  require(graph.visible_count() <= bound,
          std::to_string(graph.visible_count()) + " visible vertices exceed " + std::to_string(bound));
  const auto why = testing::check_cve_conservation(graph, matches, corpus);
  require(why.empty(), "conservation: " + why);
  std::size_t consumed = 0;
  for (const auto& [cwe, cves] : graph.consumed) consumed += cves.size();
  require(consumed >= kSyntheticCves, "fewer CVE assignments than CVEs");
  require(elapsed < kAbstractionBudgetSeconds, "build took " + fmt_seconds(elapsed));
  return std::to_string(graph.visible_count()) + " visible <= " + std::to_string(bound) + ", conservation exact, built in " +
         fmt_seconds(elapsed);
}

std::string filtering(Context&) {
  const Corpus corpus = build_corpus(testing::synthetic_entries(60, 120, 1500, 99));
  SystemTopology topology;
  const std::vector<std::string> words = {"zigbee", "usb", "linux", "gps", "camera", "i2c", "mavlink", "hdmi"};
  for (std::size_t i = 0; i < words.size(); ++i)
    topology.nodes.push_back({"node-" + words[i], "Node " + words[i], {{"protocol", words[i]}}, i % 2 == 0});
  const auto matches = match_system(topology, corpus, {});
  AvGraph graph = build_av_graph(matches, corpus);
  std::mt19937_64 rng(1234);
  for (const auto& [id, v] : graph.vertices)
    if (v.kind == VertexKind::cwe && rng() % 5 == 0) graph = expand_vertex(std::move(graph), id);
  Bucket bucket;
  for (const auto& id : graph.visible_ids())
    if (id != kUnmappedCwe && rng() % 4 == 0) bucket = bucket_add(std::move(bucket), id, matches, corpus);

  const std::vector<std::string> patterns = {"",        "zigbee",  "^CVE-2099-0001", "buffer|overflow", "us.",
                                             "^node-g", "kernel$", "[0-9]{4}",       "unmapped",        "\\bsql\\b",
                                             "CWE-1",   "x^",      "(gps|hdmi)",     "DRIVER",          "."};
  const std::vector<QueryField> all_fields = {QueryField::id, QueryField::name, QueryField::description,
                                              QueryField::components};
  auto subset = [](const std::set<std::string>& a, const std::set<std::string>& b) {
    return std::includes(b.begin(), b.end(), a.begin(), a.end());
  };
  std::size_t nonempty = 0;
  for (std::size_t q = 0; q < kFilterQueries; ++q) {
    std::set<QueryField> fields;
    for (auto f : all_fields)
      if (rng() % 2) fields.insert(f);
    std::optional<std::set<std::string>> components;
    if (rng() % 3 == 0) {
      components.emplace();
      for (const auto& n : topology.nodes)
        if (rng() % 3 == 0) components->insert(n.id);
    }
    const Query query(patterns[rng() % patterns.size()], fields, components, rng() % 4 == 0);
    const auto got = filter_av(graph, query, matches, bucket, corpus);
    require(got == testing::scan_filter(graph, query, matches, bucket, corpus),
            "query " + std::to_string(q) + " (\"" + query.pattern() + "\") differs from the linear scan");
    if (!got.empty()) ++nonempty;

    // Monotonicity: every added constraint can only shrink the result.
    auto run = [&](const Query& other) { return filter_av(graph, other, matches, bucket, corpus); };
    const auto relaxed = run(query.with_component_filter(std::nullopt).with_bucket_only(false));
    require(subset(got, relaxed), "query " + std::to_string(q) + ": constraints enlarged the result");
    require(subset(run(query.with_bucket_only(true)), got), "query " + std::to_string(q) + ": bucket_only enlarged");
    const std::string extra = topology.nodes[q % topology.nodes.size()].id;
    std::set<std::string> narrowed;
    if (query.component_filter())
      for (const auto& c : *query.component_filter())
        if (c != extra) narrowed.insert(c);
    require(query.component_filter() ? subset(run(query.with_component_filter(narrowed)), got)
                                     : subset(run(query.with_component_filter(std::set<std::string>{extra})), got),
            "query " + std::to_string(q) + ": narrower component filter enlarged the result");
    if (!query.pattern().empty()) {
      const Query unpatterned("", query.fields(), query.component_filter(), query.bucket_only());
      require(subset(got, run(unpatterned)), "query " + std::to_string(q) + ": pattern enlarged the result");
      std::set<QueryField> fewer = query.fields();
      if (fewer.size() > 1) {
        fewer.erase(fewer.begin());
        const Query reduced(query.pattern(), fewer, query.component_filter(), query.bucket_only());
        require(subset(run(reduced), got), "query " + std::to_string(q) + ": dropping a field enlarged the result");
      }
    }
  }
  return std::to_string(kFilterQueries) + " random queries equal the linear scan (" + std::to_string(nonempty) +
         " non-empty); monotone";
}

std::string layout(Context&) {
  std::mt19937_64 rng(77);
  for (int g = 0; g < 20; ++g) {
    const int n = 2 + static_cast<int>(rng() % 60);
    std::vector<std::string> ids;
    for (int i = 0; i < n; ++i) ids.push_back("v" + std::to_string(i));
    std::vector<std::pair<std::string, std::string>> edges;
    for (int i = 0; i < n; ++i) edges.emplace_back(ids[rng() % n], ids[rng() % n]);
    LayoutParams params(rng());
    params.iterations = 200;
    const auto a = fruchterman_reingold(ids, edges, params);
    require(a == fruchterman_reingold(ids, edges, params), "same seed gave different positions");
    Positions coincident;
    for (const auto& id : ids) coincident[id] = {0.25, 0.25};
    const auto c = fruchterman_reingold(ids, edges, params, coincident);
    for (const auto& [id, p] : c)
      require(std::isfinite(p.x) && std::isfinite(p.y), "non-finite position under coincident start");
    require(c == fruchterman_reingold(ids, edges, params, coincident), "coincident start is not deterministic");
  }
  for (std::size_t i = 0; i < kLayoutSpecs; ++i) {
    const auto spec = testing::random_spec(rng);
    const auto p = banded_hierarchical(spec);
    double top[3] = {-1e300, -1e300, -1e300}, bottom[3] = {1e300, 1e300, 1e300};
    for (const auto& node : spec.nodes) {
      const auto b = static_cast<int>(band_of(node.level));
      top[b] = std::max(top[b], p.at(node.id).y);
      bottom[b] = std::min(bottom[b], p.at(node.id).y);
    }
    require(top[0] < bottom[1] && top[1] < bottom[2], "bands overlap in random spec " + std::to_string(i));
  }
  return "FR deterministic and finite on 20 graphs; bands separated on " + std::to_string(kLayoutSpecs) +
         " random specs";
}

std::string round_trips(Context& ctx) {
  for (const char* name : {"uas-topology.graphml"}) {
    const auto first = parse_topology_graphml(testing::read_text(testing::fixture(name))).value;
    require(parse_topology_graphml(serialize_graphml(first)).value == first, std::string(name) + " round trip");
  }
  const auto spec = parse_spec_graphml(testing::read_text(testing::fixture("uas-spec.graphml"))).value;
  require(parse_spec_graphml(serialize_graphml(spec)).value == spec, "uas-spec.graphml round trip");

  const auto snapshot = ingest_fixtures(ctx);
  Project project = new_project(testing::fixture("uas-topology.graphml"), testing::fixture("uas-spec.graphml"), snapshot);
  project.layout_iterations = 100;
  Session session(project, load_project_corpus(project));
  session.apply(EditCommand{{"Imagery Radio Module", AttributeEdit::Action::remove, "protocol", "ZigBee"}});
  session.apply(ExpandCommand{"CWE-120"});
  session.apply(DeleteCommand{{"CVE-2099-0005"}});
  session.apply(BucketAddCommand{"CAPEC-94"});
  session.apply(BucketAddCommand{"CVE-2099-0002"});
  const auto file = ctx.dir / "roundtrip.cpsec";
  save_session(session, file);
  const auto loaded = load_session(file);
  const auto a = session.snapshot();
  const auto b = loaded.session->snapshot();
  require(a->topology == b->topology && a->spec == b->spec && a->bucket == b->bucket && a->log == b->log &&
              a->matches == b->matches && a->surface == b->surface && a->av == b->av && a->positions == b->positions,
          "reloaded session differs from the saved one");
  require(run_report(*a, "json") == run_report(*b, "json"), "reports differ after reload");

  const auto cli_bundle = ctx.dir / "cli.cpsec";
  auto made = run_cli(ctx.cli, concat({"bundle", "-o", cli_bundle.string()}, fixture_inputs(ctx)));
  require(made.status == 0, "cpsec bundle exited with " + std::to_string(made.status));
  auto surface = run_cli(ctx.cli, {"surface", "--bundle", cli_bundle.string()});
  require(surface.status == 0 && lines(surface.out) == kRadios, "cpsec surface --bundle disagrees");
  auto report = run_cli(ctx.cli, {"report", "--bundle", file.string(), "--format", "json"});
  require(report.status == 0, "cpsec report exited with " + std::to_string(report.status));
  const auto doc = nlohmann::json::parse(report.out);
  require(doc.at("edit_log").size() == 5, "CLI report lost the edit log");
  return "GraphML fixtures and bundle save/load replay equal; CLI bundle/surface/report agree";
}

}  // namespace

int main(int argc, char** argv) {
  Context ctx;
  for (int i = 1; i + 1 < argc; ++i)
    if (std::string(argv[i]) == "--cli") ctx.cli = fs::absolute(argv[i + 1]).string();
  if (ctx.cli.empty()) {
    std::cerr << "usage: cpsec_acceptance --cli <cpsec executable>\n";
    return 2;
  }

  const std::vector<std::pair<std::string, std::function<std::string(Context&)>>> criteria = {
      {"scenario-a-attack-surface", scenario_a}, {"scenario-b-what-if", scenario_b},
      {"scenario-c-exploit-chains", scenario_c}, {"scenario-d-violation-trace", scenario_d},
      {"abstraction-bound", abstraction_bound},  {"filtering", filtering},
      {"layout", layout},                        {"round-trips", round_trips},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    try {
      const std::string detail = check(ctx);
      std::cout << "PASS " << name << ": " << detail << std::endl;
    } catch (const std::exception& e) {
      ++failed;
      std::cout << "FAIL " << name << ": " << e.what() << std::endl;
    }
  }
  std::cout << (failed ? "FAILED " : "ALL PASSED ") << criteria.size() - failed << "/" << criteria.size() << std::endl;
  return failed ? 1 : 0;
}
