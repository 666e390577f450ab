#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include "cpsec/graph.hpp"
#include "test_support.hpp"

namespace cpsec {
namespace {

using ::testing::Contains;
using ::testing::Field;
using ::testing::IsEmpty;

std::vector<std::string> codes(const std::vector<Diagnostic>& diagnostics) {
  std::vector<std::string> out;
  for (const auto& d : diagnostics) out.push_back(d.code);
  return out;
}

SystemTopology two_nodes() {
  SystemTopology t;
  t.nodes = {{"a", "A", {{"protocol", "ZigBee"}}, true}, {"b", "B", {}, false}};
  t.edges = {{"e1", "a", "b", {{"protocol", "UART"}}}};
  return t;
}

SpecNode spec_node(std::string id, SpecLevel level, std::optional<std::string> component = std::nullopt) {
  return {id, id, level, "", std::move(component)};
}

TEST(TopologyValidation, AcceptsWellFormedTopology) { EXPECT_THAT(validate(two_nodes()), IsEmpty()); }

TEST(TopologyValidation, EmptyTopologyIsValid) { EXPECT_THAT(validate(SystemTopology{}), IsEmpty()); }

TEST(TopologyValidation, ReportsDuplicateNodeIds) {
  auto t = two_nodes();
  t.nodes.push_back({"a", "again", {}, false});
  EXPECT_THAT(codes(validate(t)), Contains("duplicate-id"));
}

TEST(TopologyValidation, EdgeIdsShareTheNodeNamespace) {
  auto t = two_nodes();
  t.edges[0].id = "b";
  EXPECT_THAT(codes(validate(t)), Contains("duplicate-id"));
}

TEST(TopologyValidation, ReportsDanglingEndpoint) {
  auto t = two_nodes();
  t.edges.push_back({"e2", "a", "missing", {}});
  const auto diagnostics = validate(t);
  EXPECT_THAT(codes(diagnostics), Contains("dangling-endpoint"));
  EXPECT_TRUE(has_errors(diagnostics));
}

TEST(TopologyValidation, ReportsSelfLoop) {
  auto t = two_nodes();
  t.edges.push_back({"e2", "a", "a", {}});
  EXPECT_THAT(codes(validate(t)), Contains("self-loop"));
}

TEST(TopologyValidation, ReportsEmptyIdsAndKeys) {
  auto t = two_nodes();
  t.nodes.push_back({"", "nameless", {}, false});
  t.nodes[1].attributes[""] = "x";
  const auto c = codes(validate(t));
  EXPECT_THAT(c, Contains("empty-id"));
  EXPECT_THAT(c, Contains("empty-attribute-key"));
}

TEST(TopologyLookup, FindsNodesAndEdges) {
  const auto t = two_nodes();
  ASSERT_NE(t.find_node("a"), nullptr);
  EXPECT_EQ(t.find_node("a")->name, "A");
  ASSERT_NE(t.find_edge("e1"), nullptr);
  EXPECT_EQ(t.find_edge("e1")->target, "b");
  EXPECT_EQ(t.find_node("e1"), nullptr);
  EXPECT_TRUE(t.has_element("e1"));
  EXPECT_FALSE(t.has_element("zzz"));
}

TEST(SpecLevels, BandsFollowTheHierarchy) {
  EXPECT_EQ(band_of(SpecLevel::loss), Band::mission);
  EXPECT_EQ(band_of(SpecLevel::hazard), Band::mission);
  EXPECT_EQ(band_of(SpecLevel::constraint), Band::mission);
  EXPECT_EQ(band_of(SpecLevel::control_action), Band::functional);
  EXPECT_EQ(band_of(SpecLevel::component_ref), Band::structural);
}

TEST(SpecLevels, RoundTripThroughText) {
  for (auto level : {SpecLevel::loss, SpecLevel::hazard, SpecLevel::constraint, SpecLevel::control_action,
                     SpecLevel::component_ref})
    EXPECT_EQ(parse_spec_level(to_string(level)), level);
  EXPECT_EQ(parse_spec_level("mission"), std::nullopt);
}

TEST(SpecValidation, AcceptsTheUasSpecification) {
  const auto spec = testing::uas_spec();
  const auto topology = testing::uas_topology();
  EXPECT_FALSE(has_errors(validate(spec, &topology)));
}

TEST(SpecValidation, RejectsUpwardEdges) {
  Specification s;
  s.nodes = {spec_node("L1", SpecLevel::loss), spec_node("CA1", SpecLevel::control_action)};
  s.edges = {{"CA1", "L1"}};
  EXPECT_THAT(codes(validate(s)), Contains("upward-edge"));
}

TEST(SpecValidation, RejectsMissionToStructuralSkip) {
  Specification s;
  s.nodes = {spec_node("SC1", SpecLevel::constraint), spec_node("R", SpecLevel::component_ref, "x")};
  s.edges = {{"SC1", "R"}};
  EXPECT_THAT(codes(validate(s)), Contains("band-skip"));
}

TEST(SpecValidation, AllowsIntraBandEdgesOnlyInMission) {
  Specification mission;
  mission.nodes = {spec_node("L1", SpecLevel::loss), spec_node("H1", SpecLevel::hazard),
                   spec_node("H2", SpecLevel::hazard)};
  mission.edges = {{"L1", "H1"}, {"H1", "H2"}};
  EXPECT_FALSE(has_errors(validate(mission)));

  Specification functional;
  functional.nodes = {spec_node("CA1", SpecLevel::control_action), spec_node("CA2", SpecLevel::control_action)};
  functional.edges = {{"CA1", "CA2"}};
  EXPECT_THAT(codes(validate(functional)), Contains("intra-band-edge"));
}

TEST(SpecValidation, RejectsCycles) {
  Specification s;
  s.nodes = {spec_node("H1", SpecLevel::hazard), spec_node("H2", SpecLevel::hazard)};
  s.edges = {{"H1", "H2"}, {"H2", "H1"}};
  EXPECT_THAT(codes(validate(s)), Contains("cycle"));
}

TEST(SpecValidation, ChecksComponentIdConsistency) {
  Specification s;
  s.nodes = {spec_node("R", SpecLevel::component_ref), spec_node("L1", SpecLevel::loss, "x")};
  const auto c = codes(validate(s));
  EXPECT_THAT(c, Contains("missing-component-id"));
  EXPECT_THAT(c, Contains("unexpected-component-id"));
}

TEST(SpecValidation, ResolvesComponentsOnlyAgainstACompanion) {
  Specification s;
  s.nodes = {spec_node("R", SpecLevel::component_ref, "ghost")};
  EXPECT_FALSE(has_errors(validate(s)));
  const auto topology = two_nodes();
  EXPECT_THAT(codes(validate(s, &topology)), Contains("unresolved-component"));
}

TEST(SpecValidation, ReportsDanglingEdgesAndDuplicates) {
  Specification s;
  s.nodes = {spec_node("L1", SpecLevel::loss), spec_node("L1", SpecLevel::loss)};
  s.edges = {{"L1", "H9"}};
  const auto c = codes(validate(s));
  EXPECT_THAT(c, Contains("duplicate-id"));
  EXPECT_THAT(c, Contains("dangling-endpoint"));
}

TEST(SpecValidation, DiagnosticsNameTheirSubjects) {
  Specification s;
  s.nodes = {spec_node("L1", SpecLevel::loss), spec_node("CA1", SpecLevel::control_action)};
  s.edges = {{"CA1", "L1"}};
  const auto diagnostics = validate(s);
  ASSERT_FALSE(diagnostics.empty());
  EXPECT_THAT(diagnostics, Contains(Field(&Diagnostic::subjects, Contains("CA1"))));
}

}  // namespace
}  // namespace cpsec
