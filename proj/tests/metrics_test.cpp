#include <gtest/gtest.h>

#include "contaski/audit.hpp"
#include "contaski/metrics.hpp"
#include "test_util.hpp"

using namespace contaski;
using contaski::testing::preset;

namespace {

MetricsRecord record_with(std::uint32_t nat) {
  MetricsRecord m;
  m.nat = nat;
  return m;
}

ScenarioConfig random_small_scenario(RandomStream& rng) {
  ScenarioConfig c;
  c.seed = rng.next_u64();
  c.area = {120, 120};
  GeneratedNodes g;
  g.count = static_cast<std::uint32_t>(rng.uniform_int(2, 20));
  g.placement = rng.bernoulli(0.2) ? PlacementStrategy::kGrid : PlacementStrategy::kUniformRandom;
  g.capabilities.extra_prob = rng.uniform(0.3, 1.0);
  c.nodes = g;
  c.radio.loss_prob = rng.bernoulli(0.5) ? 0.0 : rng.uniform(0.0, 0.4);
  c.radio.ap_loss_prob = rng.bernoulli(0.7) ? 0.0 : rng.uniform(0.0, 0.3);
  c.protocol.similarity_threshold = rng.uniform(0.3, 0.95);
  GeneratedTasks t;
  t.count = static_cast<std::uint32_t>(rng.uniform_int(0, 10));
  t.quorum = static_cast<std::uint32_t>(rng.uniform_int(1, 4));
  c.tasks = t;
  return c;
}

}  // namespace

TEST(RunMetrics, TwoLeadersBothAccept) {
  const auto r = run(*validate_scenario(load_scenario(preset("fig3.json"))).config);
  const auto m = compute_run_metrics(r);
  EXPECT_EQ(m.nc, 2u);
  EXPECT_EQ(m.nat, 1u);
  ASSERT_EQ(m.per_dispatch.size(), 1u);
  EXPECT_EQ(m.per_dispatch[0].cpt, 2u);
  EXPECT_EQ(m.per_dispatch[0].cit, 0u);
  EXPECT_EQ(m, compute_run_metrics_from_trace(r.trace.events()));
}

TEST(RunMetrics, NoLeadersMeansNothingAllocated) {
  auto c = *validate_scenario(load_scenario(preset("fig2.json"))).config;
  c.protocol.warmup_s = 10'000;  // commit never happens before the horizon
  c.protocol.jitter_max_ms = 0;
  const auto m = compute_run_metrics(run(c));
  EXPECT_EQ(m.nc, 0u);
  EXPECT_EQ(m.nat, 0u);
  for (const auto& d : m.per_dispatch) EXPECT_EQ(d.cpt, 0u);
}

TEST(RunMetrics, LatFromLastAccept) {
  RunResult r;
  r.ap.leaders = {NodeId{1}, NodeId{4}};
  DispatchRecord rec;
  rec.task_id = 1;
  rec.dispatch_time = SimTime::from_seconds(150);
  rec.leaders_at_dispatch = {NodeId{1}, NodeId{4}};
  rec.accepts = {{NodeId{1}, SimTime::from_seconds(150.021)}, {NodeId{4}, SimTime::from_seconds(150.035)}};
  r.ap.dispatch_log[1] = rec;
  close_confirmation_window(r.ap, 1, SimTime::from_seconds(155));
  const auto m = compute_run_metrics(r);
  ASSERT_TRUE(m.per_dispatch[0].lat);
  EXPECT_EQ(m.per_dispatch[0].lat->millis(), 35.0);
  EXPECT_EQ(m.mean_lat_ms(), 35.0);
}

TEST(Aggregate, StudentTIntervalMatchesReference) {
  // scipy.stats.t.ppf(0.975, 3) and t.ppf(0.975, 34)
  EXPECT_NEAR(student_t_critical(0.95, 4), 3.182446305284263, 1e-12);
  EXPECT_NEAR(student_t_critical(0.95, 35), 2.032244509317718, 1e-12);

  const auto s = summarize({10, 10, 9, 10});
  EXPECT_DOUBLE_EQ(s.mean, 9.75);
  ASSERT_TRUE(s.stddev);
  EXPECT_DOUBLE_EQ(*s.stddev, 0.5);
  ASSERT_TRUE(s.ci_half_width);
  EXPECT_NEAR(*s.ci_half_width, 3.182446305284263 * 0.5 / 2.0, 1e-12);

  const auto agg = aggregate_replications({record_with(10), record_with(10), record_with(9), record_with(10)});
  EXPECT_DOUBLE_EQ(agg.nat.mean, 9.75);
  EXPECT_NEAR(*agg.nat.ci_half_width, 0.7956115763210658, 1e-12);
}

TEST(Aggregate, ZeroVarianceAndSingleRecord) {
  std::vector<MetricsRecord> same(35, record_with(10));
  const auto agg = aggregate_replications(same);
  EXPECT_EQ(agg.nat.mean, 10.0);
  EXPECT_EQ(*agg.nat.ci_half_width, 0.0);

  const auto one = aggregate_replications({record_with(7)});
  EXPECT_EQ(one.nat.mean, 7.0);
  EXPECT_FALSE(one.nat.ci_half_width);
  EXPECT_FALSE(one.nat.stddev);
}

TEST(Aggregate, MeanWithinRangeProperty) {
  RandomStream rng(55);
  for (int c = 0; c < 1000; ++c) {
    std::vector<double> xs(static_cast<std::size_t>(rng.uniform_int(1, 40)));
    for (auto& x : xs) x = rng.uniform(-1e6, 1e6);
    const auto s = summarize(xs);
    EXPECT_GE(s.mean, s.min);
    EXPECT_LE(s.mean, s.max);
  }
}

// Each case is an independent simulated run; the ledger and the trace must tell
// the same story and CPT + CIT must equal the leaders addressed.
TEST(RunMetricsProperty, IdentityAndTraceEquivalence) {
  RandomStream rng(20240601);
  for (int c = 0; c < 1000; ++c) {
    auto v = validate_scenario(random_small_scenario(rng));
    ASSERT_TRUE(v.ok());
    const auto r = run(*v.config);
    const auto m = compute_run_metrics(r);
    for (const auto& d : m.per_dispatch) {
      ASSERT_EQ(d.cpt + d.cit, d.leaders_at_dispatch);
      if (d.lat) {
        ASSERT_GE(*d.lat, SimTime::from_ms(4));
        ASSERT_LE(*d.lat, SimTime::from_ms(5000));
      }
    }
    ASSERT_LE(m.nat, m.per_dispatch.size());
    ASSERT_EQ(m, compute_run_metrics_from_trace(r.trace.events())) << "case " << c;
    const auto audit = audit_trace(r.trace.events());
    ASSERT_TRUE(audit.clean()) << "case " << c << ": " << audit.violations.front().message;
  }
}

TEST(Csv, RowsPerDispatch) {
  MetricsRecord m;
  m.nc = 2;
  m.nat = 1;
  m.per_dispatch.push_back({1, SimTime::from_seconds(150), 2, 2, 0, SimTime::from_ms(35)});
  m.per_dispatch.push_back({2, SimTime::from_seconds(210), 2, 0, 2, std::nullopt});
  EXPECT_EQ(metrics_csv_rows(m, 3), "3,2,1,1,2,0,35.0\n3,2,1,2,0,2,\n");
}
