#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "flowmob/handover.hpp"
#include "flowmob/scenario.hpp"

using namespace flowmob;

namespace flowmob {
void PrintTo(ScenarioCase c, std::ostream* os) { *os << to_string(c); }
}  // namespace flowmob

namespace {

std::string read_golden(ScenarioCase c) {
  std::ifstream f(std::string(FLOWMOB_GOLDEN_DIR) + "/" + std::string(to_string(c)) + ".csv",
                  std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

// Hand sums of the per-link delays each technique's message sequence pays.
double expected_delay(Technique t, const Topology& g) {
  const double w = g.t_mr + g.t_ra;
  switch (t) {
    case Technique::ActiveDiff: return 4 * g.t_am;
    case Technique::NotactiveCom:
    case Technique::Notactive1MAG:
    case Technique::Notactive2MAG: return 2 * w + 4 * g.t_am;
    case Technique::NotactiveDiff: return 2 * w + 6 * g.t_am;
    case Technique::Active2MAG: return 2 * g.t_pn + 4 * g.t_am;
    default: return 2 * w + 2 * g.t_am;
  }
}

class EveryCase : public ::testing::TestWithParam<ScenarioCase> {};

}  // namespace

TEST_P(EveryCase, MatchesGolden) {
  const auto r = run_scenario(ScenarioSpec::canonical(GetParam()), Topology{});
  EXPECT_EQ(r.trace.to_csv(), read_golden(GetParam()));
  EXPECT_EQ(r.status, ScenarioStatus::Ok);
}

TEST_P(EveryCase, FlowsAreConserved) {
  const auto r = run_scenario(ScenarioSpec::canonical(GetParam()), Topology{});
  EXPECT_EQ(r.before.flow_ids(), r.after.flow_ids());
  EXPECT_EQ(r.after.flow_ids(), (std::vector<FlowId>{"X", "Y", "Z"}));
}

TEST_P(EveryCase, MovedFlowsLandOnTargetInterface) {
  const auto spec = ScenarioSpec::canonical(GetParam());
  const auto r = run_scenario(spec, Topology{});
  for (const auto& m : spec.moves) {
    const auto* f = r.after.flow(m.flow_id);
    ASSERT_NE(f, nullptr);
    EXPECT_EQ(f->if_id, m.target_if) << m.flow_id;
    const auto* mag = r.after.mag(m.target_mag);
    ASSERT_NE(mag, nullptr);
    const bool routed = std::any_of(mag->routes.begin(), mag->routes.end(), [&](const MagRoute& rt) {
      return rt.if_id == m.target_if && rt.prefix == f->prefix;
    });
    EXPECT_TRUE(routed) << m.flow_id;
  }
}

TEST_P(EveryCase, TraceDelayMatchesFormula) {
  const auto tr = traits_of(GetParam());
  if (!tr.technique) {
    EXPECT_TRUE(run_scenario(ScenarioSpec::canonical(GetParam()), Topology{}).trace.events.empty());
    return;
  }
  for (double t_mr : {4.0, 10.0, 25.0}) {
    Topology g;
    g.t_mr = t_mr;
    g.t_pn = 35.0;
    const auto r = run_scenario(ScenarioSpec::canonical(GetParam()), g);
    EXPECT_DOUBLE_EQ(trace_link_delay(r.trace, g), expected_delay(*tr.technique, g));
    EXPECT_DOUBLE_EQ(expected_delay(*tr.technique, g),
                     handover_components(*tr.technique, g, FormulaMode::Verbatim).d_ho);
  }
}

TEST_P(EveryCase, Deterministic) {
  const auto a = run_scenario(ScenarioSpec::canonical(GetParam()), Topology{});
  const auto b = run_scenario(ScenarioSpec::canonical(GetParam()), Topology{});
  EXPECT_EQ(a.trace.events, b.trace.events);
}

INSTANTIATE_TEST_SUITE_P(Cases, EveryCase, ::testing::ValuesIn(kAllScenarioCases),
                         [](const auto& info) { return std::string(to_string(info.param)); });

TEST(Scenario, PowerOnSharedTally) {
  const auto r = run_scenario(ScenarioSpec::canonical(ScenarioCase::PowerOnShared), Topology{});
  const auto tally = count_signaling(r.trace);
  EXPECT_EQ((tally.at({LinkClass::MagLma, MessageType::PBU})), (MessageTally{2, 152}));
  EXPECT_EQ((tally.at({LinkClass::MagLma, MessageType::PBA})), (MessageTally{2, 152}));
  EXPECT_EQ((tally.at({LinkClass::Wireless, MessageType::RA})), (MessageTally{2, 180}));
}

TEST(Scenario, BlockTally) {
  for (auto c : {ScenarioCase::PowerOnSharedBlock, ScenarioCase::PowerOnDiffBlock}) {
    const auto r = run_scenario(ScenarioSpec::canonical(c), Topology{});
    const auto tally = count_signaling(r.trace);
    EXPECT_EQ((tally.at({LinkClass::MagLma, MessageType::US})), (MessageTally{2, 112}));
    EXPECT_EQ(r.trace.count(MessageType::PBU), 0u);
  }
}

TEST(Scenario, BlockKeepsBindingAndMovesIfFlow) {
  const auto r = run_scenario(ScenarioSpec::canonical(ScenarioCase::PowerOnDiffBlock), Topology{});
  const auto* before = r.before.lma("LMA");
  const auto* after = r.after.lma("LMA");
  ASSERT_TRUE(before && after);
  EXPECT_EQ(before->bindings, after->bindings);
  EXPECT_EQ(r.after.flow("Y")->if_id, "IF2");
  EXPECT_EQ(r.after.flow("Z")->if_id, "IF3");
  EXPECT_EQ(r.after.flow("Y")->bid, r.before.flow("Y")->bid);
}

TEST(Scenario, NonBlockPowerOnMovesUniquePrefixToNewBinding) {
  const auto r = run_scenario(ScenarioSpec::canonical(ScenarioCase::PowerOnDiff), Topology{});
  const auto* lma = r.after.lma("LMA");
  ASSERT_NE(lma, nullptr);
  for (const auto& b : lma->bindings) {
    const bool has_y = std::find(b.prefixes.begin(), b.prefixes.end(), case_prefix(2)) !=
                       b.prefixes.end();
    if (has_y) {
      EXPECT_EQ(b.if_id, "IF2");
    }
  }
  EXPECT_EQ(r.trace.count(MessageType::BRI), 1u);
  EXPECT_EQ(r.trace.count(MessageType::BRA), 1u);
}

TEST(Scenario, CleanupCanBeDisabled) {
  auto spec = ScenarioSpec::canonical(ScenarioCase::AllActiveDiff);
  const Topology g;
  const auto with = run_scenario(spec, g);
  spec.fmi_cleanup = false;
  const auto without = run_scenario(spec, g);
  EXPECT_EQ(with.trace.count(MessageType::FMI), 2u);
  EXPECT_EQ(without.trace.count(MessageType::FMI), 1u);
  EXPECT_DOUBLE_EQ(trace_link_delay(with.trace, g, false), 2 * g.t_am);
}

TEST(Scenario, RejectedPrefixFallsBackToRegistration) {
  auto spec = ScenarioSpec::canonical(ScenarioCase::PowerOnDiffBlock);
  spec.moves[0].presented_prefix = Prefix::parse("2001:db8:77::/48");
  const auto r = run_scenario(spec, Topology{});
  EXPECT_EQ(r.status, ScenarioStatus::VerificationFailed);
  EXPECT_EQ(r.rejected_flows, (std::vector<FlowId>{"Y"}));
  EXPECT_EQ(r.trace.count(MessageType::US), 1u);
  EXPECT_EQ(r.trace.count(MessageType::PBU), 1u);
}

TEST(Scenario, OrMaskAcceptsWhatExactSetRejects) {
  // OR of ::1 and ::2 covers ::3.
  for (auto mode : {HnbpMode::ExactSet, HnbpMode::OrMask}) {
    auto spec = ScenarioSpec::canonical(ScenarioCase::PowerOnDiffBlock);
    spec.hnbp_mode = mode;
    spec.moves[0].presented_prefix = case_prefix(3);
    spec.flows.pop_back();
    spec.moves.pop_back();
    const auto r = run_scenario(spec, Topology{});
    EXPECT_EQ(r.status == ScenarioStatus::Ok, mode == HnbpMode::OrMask);
  }
}

TEST(Scenario, EnvironmentMismatchIsUnsupported) {
  auto spec = ScenarioSpec::canonical(ScenarioCase::AllActiveDiffMAG);
  spec.environment = Environment::SingleLMA;
  try {
    run_scenario(spec, Topology{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::UnsupportedCase);
  }
}

TEST(Scenario, BadMovesAreRejected) {
  auto unknown = ScenarioSpec::canonical(ScenarioCase::PowerOnShared);
  unknown.moves[0].flow_id = "Q";
  EXPECT_THROW(run_scenario(unknown, Topology{}), Error);
  auto same_if = ScenarioSpec::canonical(ScenarioCase::PowerOnShared);
  same_if.moves[0].target_if = "IF1";
  EXPECT_THROW(run_scenario(same_if, Topology{}), Error);
  auto not_mag = ScenarioSpec::canonical(ScenarioCase::AllActiveDiff);
  not_mag.moves[0].target_mag = "LMA";
  EXPECT_THROW(run_scenario(not_mag, Topology{}), Error);
}

TEST(Scenario, CaseNamesRoundTrip) {
  for (auto c : kAllScenarioCases) EXPECT_EQ(parse_scenario_case(to_string(c)), c);
  EXPECT_THROW(parse_scenario_case("nope"), Error);
}
