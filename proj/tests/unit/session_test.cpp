#include <gmock/gmock.h>
#include <gtest/gtest.h>

#include <atomic>
#include <thread>

#include "cpsec/session.hpp"
#include "test_support.hpp"

namespace cpsec {
namespace {

using ::testing::Contains;
using ::testing::IsEmpty;
using ::testing::IsSubsetOf;
using ::testing::Not;

const std::vector<std::string> kRadios = {"Ground Radio Module", "Imagery Radio Module", "Telemetry Radio Module"};

Project uas_project() {
  Project p;
  p.topology = testing::uas_topology();
  p.spec = testing::uas_spec();
  p.layout_iterations = 40;
  return p;
}

Command remove_zigbee(const std::string& radio) {
  return EditCommand{{radio, AttributeEdit::Action::remove, "protocol", "ZigBee"}};
}

void expect_same_model(const SessionSnapshot& a, const SessionSnapshot& b) {
  EXPECT_EQ(a.topology, b.topology);
  EXPECT_EQ(a.bucket, b.bucket);
  EXPECT_EQ(a.log, b.log);
  EXPECT_EQ(a.matches, b.matches);
  EXPECT_EQ(a.surface, b.surface);
  EXPECT_EQ(a.av, b.av);
  EXPECT_EQ(a.positions, b.positions);
}

TEST(Commands, EncodeDecodeRoundTrip) {
  const std::vector<Command> commands = {
      EditCommand{{"c1", AttributeEdit::Action::add, "k", "v \"quoted\""}},
      EditCommand{{"n", AttributeEdit::Action::remove, "k", ""}},
      DeleteCommand{{"CWE-1", "CAPEC-2"}},
      ExpandCommand{"CWE-120"},
      BucketAddCommand{"CVE-2099-0001"},
      BucketRemoveCommand{"CVE-2099-0001"},
      ResetDeletionsCommand{},
  };
  for (const auto& c : commands) EXPECT_EQ(decode_command(encode_command(c)), c) << encode_command(c);
}

TEST(Commands, DecodeErrors) {
  EXPECT_THROW(decode_command("{"), ParseError);
  EXPECT_THROW(decode_command("[]"), ParseError);
  EXPECT_THROW(decode_command(R"({"op":"fly"})"), ParseError);
  EXPECT_THROW(decode_command(R"({"op":"expand"})"), ParseError);
  EXPECT_THROW(decode_command(R"({"op":"delete","ids":"x"})"), ParseError);
  EXPECT_THROW(decode_command(R"({"op":"delete","ids":[1]})"), ParseError);
  EXPECT_THROW(decode_command(R"({"op":"edit","element":"a","action":"toggle","key":"k","value":"v"})"), ParseError);
}

TEST(Panes, Names) {
  for (auto p : {Pane::topology, Pane::spec, Pane::av}) EXPECT_EQ(parse_pane(to_string(p)), p);
  EXPECT_EQ(parse_pane("graph"), std::nullopt);
}

class SessionTest : public ::testing::Test {
 protected:
  std::shared_ptr<const Corpus> corpus = testing::uas_corpus();
  Session session{uas_project(), corpus};
};

TEST_F(SessionTest, InitialPipelineIsConsistent) {
  auto s = session.snapshot();
  EXPECT_EQ(s->matches, match_system(s->topology, *corpus, {}));
  EXPECT_EQ(s->surface, attack_surface(s->topology, s->matches));
  EXPECT_EQ(s->av, build_av_graph(s->matches, *corpus));
  EXPECT_EQ(s->positions.topology.size(), s->topology.nodes.size());
  EXPECT_EQ(s->positions.spec.size(), s->spec.nodes.size());
  EXPECT_EQ(s->positions.av.size(), s->av.visible_count());
  EXPECT_EQ(s->av_view, s->av.visible_ids());
  EXPECT_EQ(s->version, 0u);
  EXPECT_THAT(s->log, IsEmpty());
}

TEST_F(SessionTest, RejectsInvalidModels) {
  auto p = uas_project();
  p.topology.edges.push_back({"bad", "Flight Controller", "nowhere", {}});
  EXPECT_THROW(Session(p, corpus), ValidationError);
  p = uas_project();
  p.spec.edges.push_back({"Camera", "L1"});
  EXPECT_THROW(Session(p, corpus), ValidationError);
  p = uas_project();
  p.match_config.fields_searched.clear();
  EXPECT_THROW(Session(p, corpus), InvalidOperation);
}

TEST_F(SessionTest, WhatIfEditLeavesSurfaceButKeepsEvidence) {
  for (const auto& radio : kRadios) {
    auto changed = session.apply(remove_zigbee(radio));
    EXPECT_THAT(changed, Contains("surface"));
    EXPECT_THAT(changed, Contains("edit-log"));
  }
  auto s = session.snapshot();
  EXPECT_THAT(s->surface.node_ids, IsEmpty());
  for (const auto& radio : kRadios) EXPECT_THAT(s->matches.node(radio), Not(IsEmpty()));
  EXPECT_EQ(s->matches, match_system(s->topology, *corpus, {}));
  EXPECT_EQ(s->version, 3u);
}

TEST_F(SessionTest, FailedCommandLeavesStateUntouched) {
  auto before = session.snapshot();
  EXPECT_THROW(session.apply(EditCommand{{"nope", AttributeEdit::Action::add, "k", "v"}}), NotFoundError);
  EXPECT_THROW(session.apply(ExpandCommand{"CAPEC-94"}), InvalidOperation);
  EXPECT_THROW(session.apply(BucketRemoveCommand{"CAPEC-94"}), NotFoundError);
  EXPECT_EQ(session.snapshot(), before);
}

TEST_F(SessionTest, UndoEqualsReplayWithoutLastCommand) {
  EXPECT_THROW(session.undo(), InvalidOperation);
  session.apply(remove_zigbee("Imagery Radio Module"));
  session.apply(ExpandCommand{"CWE-120"});
  session.apply(BucketAddCommand{"CAPEC-94"});
  session.apply(DeleteCommand{{"CVE-2099-0003"}});
  session.undo();
  auto project = uas_project();
  project.log = {remove_zigbee("Imagery Radio Module"), ExpandCommand{"CWE-120"}, BucketAddCommand{"CAPEC-94"}};
  Session replayed(project, corpus);
  expect_same_model(*session.snapshot(), *replayed.snapshot());
  EXPECT_EQ(session.project(), replayed.project());
  session.undo();
  session.undo();
  session.undo();
  expect_same_model(*session.snapshot(), *Session(uas_project(), corpus).snapshot());
}

TEST_F(SessionTest, ReplayEqualsIncrementalApplication) {
  const std::vector<Command> log = {ExpandCommand{"CWE-120"}, BucketAddCommand{"CVE-2099-0005"},
                                    DeleteCommand{{"CVE-2099-0001"}}, remove_zigbee("Ground Radio Module"),
                                    ResetDeletionsCommand{}, BucketRemoveCommand{"CVE-2099-0005"}};
  for (const auto& c : log) session.apply(c);
  auto project = uas_project();
  project.log = log;
  expect_same_model(*session.snapshot(), *Session(project, corpus).snapshot());
}

TEST_F(SessionTest, SpecSelectionLinksComponent) {
  auto changed = session.select(Pane::spec, "Imagery Radio Module");
  EXPECT_THAT(changed, Contains("selection"));
  auto s = session.snapshot();
  EXPECT_THAT(s->selected(Pane::topology), Contains("Imagery Radio Module"));
  EXPECT_EQ(s->effective_component_filter(), (std::set<std::string>{"Imagery Radio Module"}));
  EXPECT_EQ(s->av_view, filter_av(s->av, Query("", {}, std::set<std::string>{"Imagery Radio Module"}), s->matches,
                                  s->bucket, *corpus));
  EXPECT_THAT(s->av_view, IsSubsetOf(s->av.visible_ids()));
  session.select(Pane::spec, "L1");
  EXPECT_THAT(session.snapshot()->selected(Pane::spec), Contains("L1"));
  session.clear_selection();
  EXPECT_THAT(session.snapshot()->selection, IsEmpty());
  EXPECT_EQ(session.snapshot()->av_view, s->av.visible_ids());
}

TEST_F(SessionTest, AvSelectionHighlightsComponents) {
  auto before = session.snapshot();
  std::string matched;
  for (const auto& id : before->av.visible_ids())
    if (before->matches.all_ids().contains(id)) matched = id;
  ASSERT_FALSE(matched.empty());
  session.select(Pane::av, matched);
  auto s = session.snapshot();
  EXPECT_THAT(s->highlighted, Not(IsEmpty()));
  for (const auto& node : s->topology.nodes)
    EXPECT_EQ(s->highlighted.contains(node.id), s->matches.node_ids(node.id).contains(matched)) << node.id;
  EXPECT_THROW(session.select(Pane::av, "CVE-2099-0002"), NotFoundError);  // hidden until expanded
  EXPECT_THROW(session.select(Pane::topology, "nope"), NotFoundError);
  EXPECT_THROW(session.select(Pane::spec, "nope"), NotFoundError);
}

TEST_F(SessionTest, DeletionPrunesSelection) {
  session.apply(ExpandCommand{"CWE-120"});
  session.select(Pane::av, "CVE-2099-0003");
  session.apply(DeleteCommand{{"CVE-2099-0003"}});
  EXPECT_THAT(session.snapshot()->selection, IsEmpty());
}

TEST_F(SessionTest, QueryAndProjection) {
  session.set_query(Query("radio", {QueryField::components}));
  auto s = session.snapshot();
  EXPECT_EQ(s->av_view, filter_av(s->av, s->query, s->matches, s->bucket, *corpus));

  EXPECT_THROW(session.project_bucket_rows({"CAPEC-94"}), NotFoundError);
  session.apply(BucketAddCommand{"CVE-2099-0002"});
  session.apply(BucketAddCommand{"CAPEC-94"});
  session.project_bucket_rows({});
  s = session.snapshot();
  ASSERT_TRUE(s->projection.has_value());
  EXPECT_THAT(s->projection->links,
              Contains(std::pair<std::string, std::string>{"CVE-2099-0002", "Imagery Radio Module"}));
  session.apply(BucketRemoveCommand{"CVE-2099-0002"});
  for (const auto& [id, node] : session.snapshot()->projection->links) EXPECT_NE(id, "CVE-2099-0002");
  session.clear_projection();
  EXPECT_FALSE(session.snapshot()->projection.has_value());
}

TEST_F(SessionTest, ReadersSeeConsistentSnapshotsDuringCommands) {
  std::atomic<bool> done = false;
  std::atomic<int> bad = 0;
  std::vector<std::thread> readers;
  for (int i = 0; i < 4; ++i) {
    readers.emplace_back([&] {
      std::uint64_t last = 0;
      while (!done) {
        auto s = session.snapshot();
        if (s->version < last) ++bad;
        last = s->version;
        if (s->log.size() != s->version) ++bad;
        if (s->positions.av.size() != s->av.visible_count()) ++bad;
      }
    });
  }
  for (int round = 0; round < 5; ++round) {
    session.apply(ExpandCommand{"CWE-120"});
    session.apply(BucketAddCommand{"CAPEC-94"});
    session.apply(BucketRemoveCommand{"CAPEC-94"});
  }
  done = true;
  for (auto& t : readers) t.join();
  EXPECT_EQ(bad, 0);
}

}  // namespace
}  // namespace cpsec
