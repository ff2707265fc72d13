#include "cellsleep/cellsleep.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace cellsleep;
namespace fs = std::filesystem;

namespace {

ScenarioConfig small_config() {
  auto c = reference_scenario();
  c.rounds = 6;
  c.history.days = 3;
  c.history.x_values = {0.0, 0.3, 0.6};
  return c;
}

fs::path temp_dir(const std::string& name) {
  auto p = fs::temp_directory_path() / ("cellsleep_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

TickRecord tick(std::size_t t, double watts, std::size_t active, std::uint32_t observed, std::uint32_t accepted,
                std::size_t window = 0) {
  TickRecord r;
  r.tick = t;
  r.window = window;
  r.watts = watts;
  r.active_count = active;
  r.observed = observed;
  r.accepted = accepted;
  return r;
}

RunLog synthetic_log(std::size_t carriers = 4) {
  RunLog log;
  log.xi = 0.89;
  log.tick_seconds = 60.0;
  log.windows = DayWindows{{0}};
  for (std::size_t c = 0; c < carriers; ++c) log.carrier_ids.push_back("c" + std::to_string(c));
  log.coverage_floor = 1;
  return log;
}

}  // namespace

TEST(EvaluateRun, ConstantPower) {
  auto log = synthetic_log();
  for (std::size_t t = 0; t < 10; ++t) log.ticks.push_back(tick(t, 17.5, 4, 0, 0));
  const auto m = evaluate_run(log);
  EXPECT_DOUBLE_EQ(m.overall.avg_watts, 17.5);
  EXPECT_DOUBLE_EQ(m.overall.energy_j, 17.5 * 600.0);
  EXPECT_DOUBLE_EQ(m.overall.sleep_time_pct, 0.0);
  EXPECT_TRUE(std::isnan(m.overall.acceptance));
}

TEST(EvaluateRun, UnweightedAcceptance) {
  auto log = synthetic_log();
  for (std::uint32_t a : {1u, 1u, 0u, 1u}) log.ticks.push_back(tick(log.ticks.size(), 10, 1, 1, a));
  EXPECT_DOUBLE_EQ(evaluate_run(log).overall.acceptance, 0.75);
}

TEST(EvaluateRun, CarrierWeightedAcceptance) {
  auto log = synthetic_log();
  log.ticks.push_back(tick(0, 10, 2, 2, 2));
  log.ticks.push_back(tick(1, 10, 3, 3, 1));
  EXPECT_DOUBLE_EQ(evaluate_run(log).overall.acceptance, 3.0 / 5.0);
}

TEST(EvaluateRun, SleepTimeOfEligibleCarriers) {
  auto log = synthetic_log();  // 4 carriers, floor 1 -> 3 eligible
  log.ticks.push_back(tick(0, 10, 4, 0, 0));
  log.ticks.push_back(tick(1, 10, 1, 0, 0));
  EXPECT_DOUBLE_EQ(evaluate_run(log).overall.sleep_time_pct, 50.0);
}

TEST(EvaluateRun, PerWindowBreakdown) {
  auto log = synthetic_log();
  log.windows = DayWindows{{0, 12}};
  log.ticks.push_back(tick(0, 10, 4, 2, 2, 0));
  log.ticks.push_back(tick(1, 30, 2, 2, 1, 1));
  const auto m = evaluate_run(log);
  ASSERT_EQ(m.per_window.size(), 2u);
  EXPECT_DOUBLE_EQ(m.per_window[0].avg_watts, 10);
  EXPECT_DOUBLE_EQ(m.per_window[1].avg_watts, 30);
  EXPECT_DOUBLE_EQ(m.per_window[1].acceptance, 0.5);
  EXPECT_DOUBLE_EQ(m.overall.avg_watts, 20);
}

TEST(ClosedLoop, Deterministic) {
  const auto c = small_config();
  const auto a = run_closed_loop(c);
  const auto b = run_closed_loop(c);
  ASSERT_EQ(a.log.ticks.size(), b.log.ticks.size());
  for (std::size_t i = 0; i < a.log.ticks.size(); ++i) {
    ASSERT_EQ(a.log.ticks[i].watts, b.log.ticks[i].watts);
    ASSERT_EQ(a.log.ticks[i].active_count, b.log.ticks[i].active_count);
    ASSERT_EQ(a.log.ticks[i].accepted, b.log.ticks[i].accepted);
  }
  ASSERT_EQ(a.log.rounds.size(), b.log.rounds.size());
  for (std::size_t i = 0; i < a.log.rounds.size(); ++i) ASSERT_EQ(a.log.rounds[i].x, b.log.rounds[i].x);
  ASSERT_EQ(a.log.samples.size(), b.log.samples.size());
  for (std::size_t i = 0; i < a.log.samples.size(); ++i) ASSERT_EQ(a.log.samples[i].kpis, b.log.samples[i].kpis);
}

TEST(ClosedLoop, SeedChangesTheRun) {
  auto c = small_config();
  const auto a = run_closed_loop(c);
  c.seed = 2;
  const auto b = run_closed_loop(c);
  EXPECT_NE(a.metrics.overall.energy_j, b.metrics.overall.energy_j);
}

TEST(ClosedLoop, ShapeOfTheLog) {
  const auto c = small_config();
  const auto r = run_closed_loop(c);
  const auto windows = r.log.windows.count();
  EXPECT_EQ(r.log.rounds.size(), windows * c.rounds);
  EXPECT_EQ(r.log.ticks.size(), c.rounds * c.ticks_per_day());
  EXPECT_EQ(r.beliefs.size(), windows);
  // campaign starts at hour h_0
  EXPECT_EQ(r.log.ticks.front().hour, r.log.windows.boundaries.front());
  for (const auto& t : r.log.ticks) EXPECT_EQ(t.window, r.log.windows.window_of_hour(t.hour));
}

TEST(ClosedLoop, XiZeroShutsDownAsFarAsAllowed) {
  auto c = small_config();
  c.xi = 0.0;
  const auto r = run_closed_loop(c);
  for (const auto& round : r.log.rounds) EXPECT_EQ(round.x, 1.0);
  std::size_t at_floor = 0;
  for (const auto& t : r.log.ticks) {
    EXPECT_GE(t.active_count, c.sector.coverage_floor);
    at_floor += t.active_count == c.sector.coverage_floor;
  }
  EXPECT_GT(at_floor, r.log.ticks.size() / 2);
}

TEST(ClosedLoop, DeployedThresholdsFollowTheBelief) {
  const auto c = small_config();
  const auto r = run_closed_loop(c);
  const auto tl = prepare_timeline(c);
  auto beliefs = initial_beliefs(c, tl);
  std::size_t next_sample = 0;
  for (const auto& round : r.log.rounds) {
    auto& belief = beliefs[round.window];
    ASSERT_EQ(round.x, select_x(belief, c.xi, c.x_step));
    ASSERT_EQ(round.thresholds, thresholds_from_x(round.x, c.region));
    KpiBatch batch{round.x, {}, round.window, round.round};
    for (std::size_t i = 0; i < round.samples; ++i) batch.samples.push_back(r.log.samples[next_sample++].accepted);
    ASSERT_EQ(batch.successes(), round.successes);
    belief = posterior_update(belief, batch, c.drift);
  }
  EXPECT_EQ(next_sample, r.log.samples.size());
  for (std::size_t w = 0; w < beliefs.size(); ++w) EXPECT_EQ(beliefs[w].mass, r.beliefs[w].mass);
}

TEST(ClosedLoop, TickLogIsConsistentWithPolicyAndPower) {
  const auto c = small_config();
  const auto r = run_closed_loop(c);
  const auto& ticks = r.log.ticks;
  for (std::size_t i = 0; i < ticks.size(); ++i) {
    const auto& t = ticks[i];
    std::vector<CarrierIndex> active(c.sector.order.begin(), c.sector.order.begin() + t.active_count);
    ASSERT_NEAR(t.watts, sector_power(active, t.loads, c.sector.pa_map), 1e-12);
    if (i + 1 < ticks.size()) {
      const auto& round = r.log.rounds[(i / c.ticks_per_day()) * r.log.windows.count() + t.window];
      const auto next = next_active_count(t.active_count, c.sector.carriers.size(), c.sector.coverage_floor,
                                          t.mean_load, round.thresholds);
      ASSERT_EQ(ticks[i + 1].active_count, next) << "tick " << t.tick;
    }
  }
}

TEST(ClosedLoop, AcceptanceEqualsFlatAverageOfSamples) {
  const auto r = run_closed_loop(small_config());
  std::size_t ok = 0;
  for (const auto& s : r.log.samples) ok += s.accepted;
  EXPECT_DOUBLE_EQ(r.metrics.overall.acceptance, static_cast<double>(ok) / r.log.samples.size());
  EXPECT_EQ(r.metrics.overall.samples, r.log.samples.size());
}

TEST(ClosedLoop, EnergyAccounting) {
  const auto r = run_closed_loop(small_config());
  const auto& m = r.metrics.overall;
  EXPECT_NEAR(m.avg_watts, m.energy_j / m.duration_s, 1e-9 * m.avg_watts);
  EXPECT_NEAR(r.log.rounds.back().cumulative_energy_j, m.energy_j, 1e-9 * m.energy_j);
}

TEST(ClosedLoop, DegenerateEvidenceKeepsBeliefAndWarns) {
  auto c = small_config();
  c.grid = GridSpec{1.0, 1.5, 3, 0.0, 0.0, 1};  // only p = 1 curves
  c.rounds = 2;
  c.history.days = 0;
  c.windows.auto_split = false;
  c.windows.fixed = DayWindows{{8, 20}};
  const auto r = run_closed_loop(c);
  bool flagged = false;
  for (const auto& round : r.log.rounds) flagged |= round.degenerate;
  EXPECT_TRUE(flagged);
  EXPECT_FALSE(r.log.warnings.empty());
  for (const auto& b : r.beliefs) EXPECT_NEAR(b.total(), 1.0, 1e-12);
}

TEST(Baseline, NeverSleepsAndCostsMore) {
  const auto c = small_config();
  const auto base = run_baseline(c);
  const auto tuned = run_closed_loop(c);
  EXPECT_EQ(base.metrics.overall.sleep_time_pct, 0.0);
  for (const auto& r : base.log.rounds) EXPECT_TRUE(r.thresholds.is_all_active_baseline());
  ASSERT_GT(tuned.metrics.overall.sleep_time_pct, 0.0);
  EXPECT_GT(base.metrics.overall.avg_watts, tuned.metrics.overall.avg_watts);
  EXPECT_GE(base.metrics.overall.acceptance, tuned.metrics.overall.acceptance);
  // paired: the same demand trace drives both runs
  ASSERT_EQ(base.log.ticks.size(), tuned.log.ticks.size());
  for (std::size_t i = 0; i < base.log.ticks.size(); ++i) ASSERT_EQ(base.log.ticks[i].demand, tuned.log.ticks[i].demand);
}

TEST(Timeline, TraceCsvReplay) {
  auto c = small_config();
  const auto dir = temp_dir("replay");
  const auto generated = prepare_timeline(c).trace;
  {
    std::ofstream out(dir / "trace.csv");
    write_trace_csv(out, generated);
  }
  const auto direct = run_closed_loop(c);
  c.trace_csv = (dir / "trace.csv").string();
  const auto replayed = run_closed_loop(c);
  EXPECT_EQ(direct.metrics.overall.energy_j, replayed.metrics.overall.energy_j);

  c.rounds = 100;  // longer than the file
  EXPECT_THROW(run_closed_loop(c), ConfigError);
}

TEST(Timeline, CheckpointsResumeTheBelief) {
  auto c = small_config();
  const auto first = run_closed_loop(c);
  const auto dir = temp_dir("resume");
  write_run(dir, first.log, first.metrics, first.beliefs);
  for (std::size_t w = 0; w < first.beliefs.size(); ++w)
    c.prior_checkpoints.push_back((dir / ("belief_w" + std::to_string(w) + ".txt")).string());
  const auto tl = prepare_timeline(c);
  const auto priors = initial_beliefs(c, tl);
  for (std::size_t w = 0; w < priors.size(); ++w) EXPECT_EQ(priors[w].mass, first.beliefs[w].mass);

  c.prior_checkpoints.pop_back();
  EXPECT_THROW(initial_beliefs(c, tl), ConfigError);
}

TEST(RunLogIo, WriteThenReadGivesSameMetrics) {
  const auto r = run_closed_loop(small_config());
  const auto dir = temp_dir("runlog");
  write_run(dir, r.log, r.metrics, r.beliefs);
  for (auto f : {"meta.json", "ticks.csv", "samples.csv", "rounds.csv", "summary.json", "belief_w0.txt"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  const auto back = read_run(dir);
  EXPECT_EQ(back.ticks.size(), r.log.ticks.size());
  EXPECT_EQ(back.rounds.size(), r.log.rounds.size());
  EXPECT_EQ(back.samples.size(), r.log.samples.size());
  EXPECT_EQ(back.windows, r.log.windows);
  const auto m = evaluate_run(back);
  EXPECT_DOUBLE_EQ(m.overall.avg_watts, r.metrics.overall.avg_watts);
  EXPECT_DOUBLE_EQ(m.overall.acceptance, r.metrics.overall.acceptance);
  EXPECT_DOUBLE_EQ(m.overall.sleep_time_pct, r.metrics.overall.sleep_time_pct);
  EXPECT_DOUBLE_EQ(m.overall.kpi_low_quantile, r.metrics.overall.kpi_low_quantile);
  for (std::size_t i = 0; i < back.rounds.size(); ++i) EXPECT_EQ(back.rounds[i].x, r.log.rounds[i].x);
}

TEST(RunLogIo, MissingDirectoryIsConfigError) { EXPECT_THROW(read_run("/nonexistent/run"), ConfigError); }

TEST(Sweep, OptimumIsLargestClosestPoint) {
  const std::vector<double> xs{0.0, 0.25, 0.5, 0.75, 1.0};
  EXPECT_EQ(constrained_optimum(xs, std::vector{1.0, 0.95, 0.9, 0.88, 0.5}, 0.89), 0.75);
  EXPECT_EQ(constrained_optimum(xs, std::vector{1.0, 1.0, 1.0, 1.0, 1.0}, 0.89), 1.0);
}

TEST(Sweep, ShapeAndEndpoints) {
  auto c = small_config();
  const auto s = sweep_x(c, 0.25, 20);
  ASSERT_EQ(s.xs.size(), 5u);
  ASSERT_EQ(s.acceptance.size(), s.windows.count());
  for (std::size_t w = 0; w < s.windows.count(); ++w) EXPECT_GT(s.acceptance[w].front(), s.acceptance[w].back());
  EXPECT_GT(s.avg_watts.front(), s.avg_watts.back());
}

TEST(Compare, PriorExploitationAndSaBehaviour) {
  auto c = small_config();
  c.rounds = 15;
  c.history.days = 7;
  c.sweep = {0.02, 120};
  c.sa.eps0 = 3.0;
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  const auto report = compare_tuners(c, seeds);
  bool overshoot = false;
  for (const auto& row : report.rows) {
    if (row.round == 0 && row.method == "bayes") {
      EXPECT_NE(row.x, c.sa.x0);
    }
    if (row.round == 0 && row.method == "sa") {
      EXPECT_EQ(row.x, c.sa.x0);
    }
    if (row.method == "sa" && row.x < report.sweep.x_star[row.window]) overshoot = true;
  }
  EXPECT_TRUE(overshoot);
  EXPECT_GE(report.bayes.mean_final_acceptance, c.xi - 0.1);
  EXPECT_GE(report.sa.mean_final_acceptance, c.xi - 0.1);
  EXPECT_EQ(report.bayes.rounds_to_converge.size(), seeds.size() * report.sweep.windows.count());
}

TEST(Compare, RoundsToConverge) {
  EXPECT_EQ(rounds_to_converge(std::vector{0.9, 0.5, 0.3}, 0.32, 0.05), 2.0);
  EXPECT_TRUE(std::isinf(rounds_to_converge(std::vector{0.9, 0.5}, 0.1, 0.05)));
}

TEST(Generative, StationaryCurveIsTracked) {
  GenerativeCampaign g;
  g.drift = {0.01, 0.02};
  const auto t = run_generative_bayes(g, [](std::size_t, double x) { return std::clamp(1.0 - x, 0.0, 1.0); });
  EXPECT_NEAR(t.x.back(), 0.11, 0.05);
}

TEST(Generative, SaMovesTowardTheTarget) {
  GenerativeCampaign g;
  g.rounds = 60;
  const auto t = run_generative_sa(g, [](std::size_t, double x) { return std::clamp(1.0 - x, 0.0, 1.0); });
  EXPECT_EQ(t.x.front(), g.sa_x0);
  EXPECT_LT(std::abs(t.x.back() - 0.11), std::abs(t.x.front() - 0.11));
}
