#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "flowmob/analytical.hpp"
#include "flowmob/sim.hpp"

using namespace flowmob;

namespace {

SimConfig small(Technique t, int reps = 200) {
  SimConfig c;
  c.technique = t;
  c.replications = reps;
  c.arrivals_per_run = 2000;
  c.seed = 42;
  c.threads = 1;
  return c;
}

}  // namespace

TEST(SplitMix, ReferenceOutput) {
  // First output of the reference SplitMix64 generator seeded with 0.
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
  EXPECT_NE(replication_seed(1, 0), replication_seed(1, 1));
  EXPECT_NE(replication_seed(1, 0), replication_seed(2, 0));
}

TEST(Moments, MergeMatchesSequential) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(5.0, 2.0);
  Moments all, a, b;
  for (int i = 0; i < 1000; ++i) {
    const double x = n(rng);
    all.add(x);
    (i % 3 ? a : b).add(x);
  }
  a.merge(b);
  EXPECT_EQ(a.count(), all.count());
  EXPECT_NEAR(a.mean(), all.mean(), 1e-12);
  EXPECT_NEAR(a.variance(), all.variance(), 1e-9);
  Moments one;
  one.add(1.0);
  EXPECT_FALSE(one.ci95().has_value());
}

TEST(Sim, NoJitterNoLoadHitsAnalyticFloor) {
  for (auto t : kAllTechniques) {
    auto c = small(t, 5);
    c.jitter = 0.0;
    c.arrival_rate = 0.0;
    c.service_rate = 1e12;  // service times ~1e-9 ms
    const auto r = run_campaign(c);
    EXPECT_NEAR(r.mean_handover_latency, handover_components(t, c.delay_means).d_ho, 1e-6);
    EXPECT_EQ(r.packets_lost, 0.0);
  }
}

TEST(Sim, NoLoadAddsPureServiceTimes) {
  auto c = small(Technique::NotactiveComBlock, 4000);
  c.jitter = 0.0;
  c.arrival_rate = 0.0;
  const auto r = run_campaign(c);
  const auto hc = handover_components(c.technique, c.delay_means);
  const double expected = hc.d_ho + hc.n_ho * 1000.0 / c.service_rate;
  ASSERT_TRUE(r.ci95);
  EXPECT_NEAR(r.mean_handover_latency, expected, 3 * r.ci95->latency_ms);
  const auto s = simulate_once(c, 0);
  EXPECT_DOUBLE_EQ(s.link_delay_ms, hc.d_ho);
}

TEST(Sim, HopDelayTracksAnalytics) {
  for (auto t : {Technique::ActiveDiff, Technique::NotactiveDiff, Technique::NotactiveComBlock}) {
    const auto r = run_campaign(small(t));
    const double analytic = avg_hop_delay(t, Topology{}) + 1000.0 * packet_service_delay(100, 150);
    EXPECT_NEAR(r.mean_hop_delay, analytic, 0.05 * analytic) << to_string(t);
  }
}

TEST(Sim, LittlesLaw) {
  const auto r = run_campaign(small(Technique::ActiveDiff, 50));
  EXPECT_NEAR(r.mean_occupancy, 100 * 0.02, 0.1 * 2.0);
}

TEST(Sim, SameSeedAnyWorkerCount) {
  auto c = small(Technique::Active2MAG, 64);
  const auto one = run_campaign(c);
  c.threads = 3;
  EXPECT_EQ(run_campaign(c), one);
  c.threads = 8;
  EXPECT_EQ(run_campaign(c), one);
}

TEST(Sim, SeedChangesResult) {
  auto c = small(Technique::ActiveDiff, 20);
  const auto a = run_campaign(c);
  c.seed = 43;
  EXPECT_NE(run_campaign(c).mean_handover_latency, a.mean_handover_latency);
}

TEST(Sim, SingleReplicationEqualsSample) {
  const auto c = small(Technique::NotactiveCom, 1);
  const auto r = run_campaign(c);
  const auto s = simulate_once(c, 0);
  EXPECT_FALSE(r.ci95.has_value());
  EXPECT_EQ(r.mean_handover_latency, s.latency_ms);
  EXPECT_EQ(r.packets_lost, s.lost);
  EXPECT_EQ(r.packet_density, s.lost / s.hops);
}

TEST(Sim, ConfidenceShrinksWithReplications) {
  const auto few = run_campaign(small(Technique::NotactiveCom, 50));
  const auto many = run_campaign(small(Technique::NotactiveCom, 800));
  ASSERT_TRUE(few.ci95 && many.ci95);
  EXPECT_LT(many.ci95->latency_ms, few.ci95->latency_ms);
  EXPECT_LT(many.ci95->hop_delay_ms, few.ci95->hop_delay_ms);
}

TEST(Sim, DensityRaisesLatency) {
  double prev = 0;
  for (double k : {0.1, 0.5, 0.9}) {
    auto c = small(Technique::NotactiveComBlock, 100);
    c.k_ratio = k;
    const double lat = run_campaign(c).mean_handover_latency;
    EXPECT_GT(lat, prev);
    prev = lat;
  }
}

TEST(Sim, ConfigValidation) {
  auto bad = [](auto mutate) {
    auto c = small(Technique::ActiveDiff);
    mutate(c);
    try {
      c.validate();
    } catch (const Error& e) {
      return e.code() == ErrorCode::InvalidConfig;
    }
    return false;
  };
  EXPECT_TRUE(bad([](SimConfig& c) { c.jitter = 1.0; }));
  EXPECT_TRUE(bad([](SimConfig& c) { c.arrival_rate = 150; }));
  EXPECT_TRUE(bad([](SimConfig& c) { c.replications = 0; }));
  EXPECT_TRUE(bad([](SimConfig& c) { c.arrivals_per_run = 8; }));
  EXPECT_TRUE(bad([](SimConfig& c) { c.k_ratio = 1.0; }));
}
