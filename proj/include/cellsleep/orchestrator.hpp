#pragma once

// Closed-loop campaigns over a simulated sector.
//
// Time runs in ticks. Each tick the demand is spread over the active
// carriers, PA power is accounted and the hysteresis policy picks the next
// active count. At the end of every KPI collection period one binary sample
// is drawn per active carrier. A "round" is one occurrence of a day window:
// its learner proposes x, rho^x is deployed for the whole occurrence, and the
// samples gathered during it form the round's batch.
//
// Random streams are derived from (seed, stream id), so a scenario and seed
// fully determine every log.

#include "cellsleep/bayes_tuner.hpp"
#include "cellsleep/errors.hpp"
#include "cellsleep/power_model.hpp"
#include "cellsleep/scenario.hpp"
#include "cellsleep/shutdown_policy.hpp"
#include "cellsleep/traffic_sim.hpp"
#include "cellsleep/window_split.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace cellsleep {

namespace streams {
inline constexpr std::uint64_t trace = 1;
inline constexpr std::uint64_t campaign_kpi = 2;
inline constexpr std::uint64_t history_kpi = 3;
inline constexpr std::uint64_t sweep_trace = 4;
inline constexpr std::uint64_t sweep_kpi = 5;
inline constexpr std::uint64_t generative = 6;
}  // namespace streams

inline std::mt19937_64 make_stream(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

// ---------------------------------------------------------------------------
// Run log

struct TickRecord {
  std::size_t tick{0};  ///< absolute trace tick
  int hour{0};
  std::size_t window{0};
  std::size_t active_count{0};
  double demand{0.0};
  double cqi{0.0};
  double mean_load{0.0};
  double overflow{0.0};
  double watts{0.0};
  std::vector<double> loads;  ///< per carrier index, 0 when inactive
  std::uint32_t observed{0};  ///< KPI samples taken this tick (|A'_t|)
  std::uint32_t accepted{0};
};

struct KpiSampleRecord {
  std::size_t tick{0};
  CarrierIndex carrier{0};
  std::vector<double> kpis;
  bool accepted{false};
};

struct RoundRecord {
  std::size_t window{0};
  std::size_t round{0};
  double x{0.0};
  ThresholdPair thresholds;
  std::size_t samples{0};
  std::size_t successes{0};
  double expected_acceptance{std::numeric_limits<double>::quiet_NaN()};  ///< belief E[p(x)] when proposed
  bool degenerate{false};
  double cumulative_energy_j{0.0};  ///< campaign energy up to the end of this round
  std::string checkpoint;

  double batch_mean() const { return samples == 0 ? 0.0 : static_cast<double>(successes) / samples; }
};

struct RunLog {
  std::string mode;
  double xi{0.0};
  double tick_seconds{60.0};
  DayWindows windows;
  std::vector<std::string> carrier_ids;
  std::size_t coverage_floor{1};
  std::vector<std::string> kpi_names;
  std::vector<TickRecord> ticks;
  std::vector<KpiSampleRecord> samples;
  std::vector<RoundRecord> rounds;
  std::vector<std::string> warnings;

  std::size_t carrier_count() const { return carrier_ids.size(); }
};

// ---------------------------------------------------------------------------
// Sector engine

class SectorEngine {
 public:
  struct Outcome {
    std::size_t active_count{0};
    double mean_load{0.0};
    double overflow{0.0};
    double watts{0.0};
    std::uint32_t observed{0};
    std::uint32_t accepted{0};
  };

  SectorEngine(const ScenarioConfig& config, std::uint64_t kpi_seed, std::uint64_t kpi_stream)
      : config_(config), rng_(make_stream(kpi_seed, kpi_stream)) {
    const auto& sector = config.sector;
    for (auto c : sector.order) ordered_specs_.push_back(sector.carriers[c]);
    state_.ordered_carriers = sector.order;
    state_.coverage_floor = sector.coverage_floor;
    state_.active_count = sector.carriers.size();
    sector_weight_ = sector.total_weight();
    active_loads_.resize(sector.carriers.size());
    loads_.resize(sector.carriers.size());
    kpi_values_.resize(config.kpis.size());
  }

  std::size_t active_count() const { return state_.active_count; }
  std::span<const double> loads() const { return loads_; }

  /// Advances one tick. When `collect` is set, one binary sample per active
  /// carrier is appended to `batch` (and the raw KPI values to `samples`).
  Outcome step(std::size_t tick, double demand, double cqi, bool collect, const ThresholdPair& thresholds,
               std::vector<std::uint8_t>* batch, std::vector<KpiSampleRecord>* samples) {
    Outcome out;
    const std::size_t n = state_.active_count;
    out.active_count = n;
    const std::span<const CarrierSpec> active(ordered_specs_.data(), n);
    out.overflow = redistribute_into(demand, active, sector_weight_, active_loads_);
    std::fill(loads_.begin(), loads_.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) loads_[state_.ordered_carriers[i]] = active_loads_[i];
    out.mean_load = mean_load(std::span<const double>(active_loads_.data(), n), active, config_.mean_load_mode);
    out.watts = sector_power(state_.active_carriers(), loads_, config_.sector.pa_map);

    if (collect) {
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t k = 0; k < config_.kpis.size(); ++k)
          kpi_values_[k] = sample_kpi(active_loads_[i], cqi, config_.kpis[k], rng_);
        const bool ok = kpi_accept(kpi_values_, config_.targets);
        ++out.observed;
        out.accepted += ok ? 1 : 0;
        if (batch) batch->push_back(ok ? 1 : 0);
        if (samples) samples->push_back({tick, state_.ordered_carriers[i], kpi_values_, ok});
      }
    }
    state_.active_count = next_active_count(n, state_.carrier_count(), state_.coverage_floor, out.mean_load,
                                            thresholds);
    return out;
  }

 private:
  const ScenarioConfig& config_;
  std::mt19937_64 rng_;
  std::vector<CarrierSpec> ordered_specs_;
  PolicyState state_;
  double sector_weight_{1.0};
  std::vector<double> active_loads_;
  std::vector<double> loads_;
  std::vector<double> kpi_values_;
};

// ---------------------------------------------------------------------------
// Per-window learners

class WindowTuner {
 public:
  virtual ~WindowTuner() = default;
  virtual double propose() = 0;
  virtual void observe(const KpiBatch& batch) = 0;
  /// Belief-expected acceptance of the last proposal, NaN when not modelled.
  virtual double expected_acceptance() const { return std::numeric_limits<double>::quiet_NaN(); }
  /// True when the last observe() hit degenerate evidence.
  virtual bool degenerate() const { return false; }
};

class BayesTuner : public WindowTuner {
 public:
  BayesTuner(ParamBelief prior, DriftKernel drift, double xi, double x_step)
      : belief_(std::move(prior)), drift_(drift), xi_(xi), x_step_(x_step) {}

  double propose() override {
    last_x_ = select_x(belief_, xi_, x_step_);
    expected_ = belief_.expected_prob(last_x_);
    return last_x_;
  }
  void observe(const KpiBatch& batch) override {
    degenerate_ = false;
    try {
      belief_ = posterior_update(belief_, batch, drift_);
    } catch (const DegenerateEvidence&) {
      degenerate_ = true;
    }
  }
  double expected_acceptance() const override { return expected_; }
  bool degenerate() const override { return degenerate_; }
  const ParamBelief& belief() const { return belief_; }

 private:
  ParamBelief belief_;
  DriftKernel drift_;
  double xi_;
  double x_step_;
  double last_x_{0.0};
  double expected_{std::numeric_limits<double>::quiet_NaN()};
  bool degenerate_{false};
};

class SaTuner : public WindowTuner {
 public:
  SaTuner(double x0, double eps0, double xi) : x_(x0), eps0_(eps0), xi_(xi) {}

  double propose() override { return x_; }
  void observe(const KpiBatch& batch) override {
    ++k_;
    if (batch.size() > 0) x_ = sa_step(x_, batch.mean(), xi_, sa_step_size(eps0_, k_));
  }

 private:
  double x_;
  double eps0_;
  double xi_;
  std::size_t k_{0};
};

/// Cycles through a fixed list of x values, one per round.
class FixedTuner : public WindowTuner {
 public:
  explicit FixedTuner(std::vector<double> xs) : xs_(std::move(xs)) {
    if (xs_.empty()) throw ConfigError("fixed tuner: no x values");
  }
  double propose() override { return xs_[next_++ % xs_.size()]; }
  void observe(const KpiBatch&) override {}

 private:
  std::vector<double> xs_;
  std::size_t next_{0};
};

using TunerSet = std::vector<std::unique_ptr<WindowTuner>>;

// ---------------------------------------------------------------------------
// Schedule runner

struct ScheduleOptions {
  std::string mode;
  std::optional<ThresholdPair> forced_thresholds;  ///< bypasses the tuners' x mapping
  std::uint64_t kpi_seed{1};
  std::uint64_t kpi_stream{streams::campaign_kpi};
  RunLog* log{nullptr};                         ///< full per-tick log when set
  std::vector<std::vector<KpiBatch>>* batches{nullptr};  ///< per-window batches when set
};

/// Runs `days` window-days starting at `start_tick`, which must be hour h_0 of
/// some day. Returns total energy in joules.
inline double run_schedule(const ScenarioConfig& config, const TrafficTrace& trace, const DayWindows& windows,
                           std::size_t start_tick, std::size_t days, TunerSet& tuners,
                           const ScheduleOptions& options) {
  const std::size_t tpd = config.ticks_per_day();
  const std::size_t tph = config.ticks_per_hour();
  const std::size_t tpc = config.ticks_per_collection();
  if (tuners.size() != windows.count()) throw ConfigError("run_schedule: one tuner per window required");
  if (start_tick + days * tpd > trace.size())
    throw ConfigError("trace too short: need " + std::to_string(start_tick + days * tpd) + " ticks, have " +
                      std::to_string(trace.size()));
  if (options.batches) options.batches->assign(windows.count(), {});

  SectorEngine engine(config, options.kpi_seed, options.kpi_stream);
  std::vector<std::uint8_t> batch_samples;
  double energy = 0.0;
  std::size_t tick = start_tick;
  for (std::size_t day = 0; day < days; ++day) {
    for (std::size_t w = 0; w < windows.count(); ++w) {
      auto& tuner = *tuners[w];
      const double x = tuner.propose();
      const ThresholdPair thresholds = options.forced_thresholds ? *options.forced_thresholds
                                                                 : thresholds_from_x(x, config.region);
      const std::size_t length = static_cast<std::size_t>(windows.length(w)) * tph;
      batch_samples.clear();
      for (std::size_t i = 0; i < length; ++i, ++tick) {
        const bool collect = (tick + 1) % tpc == 0;
        const auto out = engine.step(tick, trace.demand[tick], trace.cqi[tick], collect, thresholds, &batch_samples,
                                     options.log ? &options.log->samples : nullptr);
        energy += out.watts * config.tick_seconds;
        if (options.log) {
          TickRecord rec;
          rec.tick = tick;
          rec.hour = static_cast<int>((tick % tpd) / tph);
          rec.window = w;
          rec.active_count = out.active_count;
          rec.demand = trace.demand[tick];
          rec.cqi = trace.cqi[tick];
          rec.mean_load = out.mean_load;
          rec.overflow = out.overflow;
          rec.watts = out.watts;
          rec.loads.assign(engine.loads().begin(), engine.loads().end());
          rec.observed = out.observed;
          rec.accepted = out.accepted;
          options.log->ticks.push_back(std::move(rec));
        }
      }
      KpiBatch batch{x, batch_samples, w, day};
      const double expected = tuner.expected_acceptance();
      tuner.observe(batch);
      if (options.batches) (*options.batches)[w].push_back(batch);
      if (options.log) {
        RoundRecord r;
        r.window = w;
        r.round = day;
        r.x = x;
        r.thresholds = thresholds;
        r.samples = batch.size();
        r.successes = batch.successes();
        r.expected_acceptance = expected;
        r.degenerate = tuner.degenerate();
        r.cumulative_energy_j = energy;
        if (r.degenerate)
          options.log->warnings.push_back("degenerate evidence in window " + std::to_string(w) + " round " +
                                          std::to_string(day) + "; belief kept");
        options.log->rounds.push_back(r);
      }
    }
  }
  return energy;
}

// ---------------------------------------------------------------------------
// Timeline: history segment followed by the campaign, on one trace.

struct Timeline {
  TrafficTrace trace;
  DayWindows windows;
  std::size_t history_start{0};
  std::size_t campaign_start{0};
};

inline DayWindows resolve_windows(const ScenarioConfig& config, const TrafficTrace& trace) {
  if (!config.windows.auto_split) return config.windows.fixed;
  const std::size_t span = config.history.days * config.ticks_per_day();
  const auto buckets =
      cqi_by_hour(std::span<const double>(trace.cqi).first(std::min(span, trace.size())), config.tick_seconds);
  return split_day(buckets, config.windows.n_max, config.windows.min_len).windows;
}

inline Timeline prepare_timeline(const ScenarioConfig& config) {
  config.validate();
  Timeline tl;
  const std::size_t days = config.history.days + config.rounds + 1;
  if (config.trace_csv.empty()) {
    auto rng = make_stream(config.seed, streams::trace);
    tl.trace = generate_trace(config.traffic, days, config.tick_seconds, rng);
  } else {
    tl.trace = load_trace_csv(config.trace_csv, config.tick_seconds);
  }
  tl.windows = resolve_windows(config, tl.trace);
  const std::size_t offset = static_cast<std::size_t>(tl.windows.boundaries.front()) * config.ticks_per_hour();
  tl.history_start = offset;
  tl.campaign_start = config.history.days * config.ticks_per_day() + offset;
  return tl;
}

inline RunLog make_log_header(const ScenarioConfig& config, const DayWindows& windows, std::string mode) {
  RunLog log;
  log.mode = std::move(mode);
  log.xi = config.xi;
  log.tick_seconds = config.tick_seconds;
  log.windows = windows;
  for (const auto& c : config.sector.carriers) log.carrier_ids.push_back(c.id);
  log.coverage_floor = config.sector.coverage_floor;
  for (const auto& k : config.kpis) log.kpi_names.push_back(k.name);
  return log;
}

/// Per-window batches from replaying the history segment at the configured x values.
inline std::vector<std::vector<KpiBatch>> collect_history(const ScenarioConfig& config, const Timeline& tl) {
  std::vector<std::vector<KpiBatch>> batches(tl.windows.count());
  if (config.history.days == 0) return batches;
  TunerSet tuners;
  for (std::size_t w = 0; w < tl.windows.count(); ++w)
    tuners.push_back(std::make_unique<FixedTuner>(config.history.x_values));
  ScheduleOptions opt;
  opt.mode = "history";
  opt.kpi_seed = config.seed;
  opt.kpi_stream = streams::history_kpi;
  opt.batches = &batches;
  run_schedule(config, tl.trace, tl.windows, tl.history_start, config.history.days, tuners, opt);
  return batches;
}

inline std::vector<ParamBelief> initial_beliefs(const ScenarioConfig& config, const Timeline& tl) {
  std::vector<ParamBelief> priors;
  if (!config.prior_checkpoints.empty()) {
    if (config.prior_checkpoints.size() != tl.windows.count())
      throw ConfigError("prior_checkpoints: need one checkpoint per window");
    for (const auto& path : config.prior_checkpoints) {
      std::ifstream in(path);
      if (!in) throw ConfigError("cannot open belief checkpoint: " + path);
      auto belief = read_belief(in);
      if (!(belief.grid == config.grid)) throw ConfigError("belief checkpoint grid differs from config: " + path);
      priors.push_back(std::move(belief));
    }
    return priors;
  }
  const auto history = collect_history(config, tl);
  for (std::size_t w = 0; w < tl.windows.count(); ++w) priors.push_back(init_prior(config.grid, history[w]));
  return priors;
}

// ---------------------------------------------------------------------------
// Metrics

struct WindowMetrics {
  double avg_watts{0.0};
  double energy_j{0.0};
  double duration_s{0.0};
  double acceptance{std::numeric_limits<double>::quiet_NaN()};
  std::size_t samples{0};
  double sleep_time_pct{0.0};
  double kpi_low_quantile{std::numeric_limits<double>::quiet_NaN()};  ///< (1-xi)-quantile of the first KPI
};

struct RunMetrics {
  WindowMetrics overall;
  std::vector<WindowMetrics> per_window;
};

namespace detail {

struct MetricAccumulator {
  double watts_sum{0.0};
  std::size_t ticks{0};
  std::size_t observed{0};
  std::size_t accepted{0};
  std::size_t sleeping{0};  ///< carrier-ticks asleep
  std::vector<double> first_kpi;

  WindowMetrics finish(double tick_seconds, std::size_t eligible, double xi) {
    WindowMetrics m;
    if (ticks > 0) {
      m.avg_watts = watts_sum / static_cast<double>(ticks);
      m.energy_j = watts_sum * tick_seconds;
      m.duration_s = static_cast<double>(ticks) * tick_seconds;
      if (eligible > 0)
        m.sleep_time_pct = 100.0 * static_cast<double>(sleeping) / (static_cast<double>(eligible) * ticks);
    }
    m.samples = observed;
    if (observed > 0) m.acceptance = static_cast<double>(accepted) / static_cast<double>(observed);
    if (!first_kpi.empty()) {
      std::sort(first_kpi.begin(), first_kpi.end());
      const auto rank = static_cast<std::size_t>(std::floor((1.0 - xi) * static_cast<double>(first_kpi.size())));
      m.kpi_low_quantile = first_kpi[std::min(rank, first_kpi.size() - 1)];
    }
    return m;
  }
};

}  // namespace detail

/// Time-average PA power, carrier-and-time weighted KPI acceptance, and the
/// share of eligible carrier-time spent asleep; overall and per window.
inline RunMetrics evaluate_run(const RunLog& log) {
  const std::size_t carriers = log.carrier_count();
  const std::size_t eligible = carriers > log.coverage_floor ? carriers - log.coverage_floor : 0;
  detail::MetricAccumulator all;
  std::vector<detail::MetricAccumulator> win(log.windows.count());
  for (const auto& t : log.ticks) {
    for (auto* acc : {&all, &win.at(t.window)}) {
      acc->watts_sum += t.watts;
      ++acc->ticks;
      acc->observed += t.observed;
      acc->accepted += t.accepted;
      acc->sleeping += carriers - t.active_count;
    }
  }
  // Samples carry the raw KPI values; map each back to its tick's window.
  if (!log.samples.empty() && !log.ticks.empty()) {
    const std::size_t first_tick = log.ticks.front().tick;
    for (const auto& s : log.samples) {
      if (s.kpis.empty()) continue;
      const auto& t = log.ticks.at(s.tick - first_tick);
      all.first_kpi.push_back(s.kpis.front());
      win.at(t.window).first_kpi.push_back(s.kpis.front());
    }
  }
  RunMetrics m;
  m.overall = all.finish(log.tick_seconds, eligible, log.xi);
  for (auto& w : win) m.per_window.push_back(w.finish(log.tick_seconds, eligible, log.xi));
  return m;
}

// ---------------------------------------------------------------------------
// Campaigns

struct CampaignResult {
  RunLog log;
  RunMetrics metrics;
  std::vector<ParamBelief> beliefs;  ///< final per-window beliefs (Bayesian runs only)
};

inline CampaignResult run_closed_loop(const ScenarioConfig& config) {
  const Timeline tl = prepare_timeline(config);
  auto priors = initial_beliefs(config, tl);
  TunerSet tuners;
  for (auto& p : priors)
    tuners.push_back(std::make_unique<BayesTuner>(std::move(p), config.drift, config.xi, config.x_step));
  CampaignResult result;
  result.log = make_log_header(config, tl.windows, "bayes");
  ScheduleOptions opt;
  opt.mode = "bayes";
  opt.kpi_seed = config.seed;
  opt.log = &result.log;
  run_schedule(config, tl.trace, tl.windows, tl.campaign_start, config.rounds, tuners, opt);
  for (auto& t : tuners) result.beliefs.push_back(static_cast<BayesTuner&>(*t).belief());
  result.metrics = evaluate_run(result.log);
  return result;
}

inline CampaignResult run_sa_campaign(const ScenarioConfig& config) {
  const Timeline tl = prepare_timeline(config);
  TunerSet tuners;
  for (std::size_t w = 0; w < tl.windows.count(); ++w)
    tuners.push_back(std::make_unique<SaTuner>(config.sa.x0, config.sa.eps0, config.xi));
  CampaignResult result;
  result.log = make_log_header(config, tl.windows, "sa");
  ScheduleOptions opt;
  opt.mode = "sa";
  opt.kpi_seed = config.seed;
  opt.log = &result.log;
  run_schedule(config, tl.trace, tl.windows, tl.campaign_start, config.rounds, tuners, opt);
  result.metrics = evaluate_run(result.log);
  return result;
}

/// Same campaign span and trace, thresholds fixed at x in every window.
inline CampaignResult run_fixed(const ScenarioConfig& config, double x) {
  const Timeline tl = prepare_timeline(config);
  TunerSet tuners;
  for (std::size_t w = 0; w < tl.windows.count(); ++w) tuners.push_back(std::make_unique<FixedTuner>(std::vector{x}));
  CampaignResult result;
  result.log = make_log_header(config, tl.windows, "fixed");
  ScheduleOptions opt;
  opt.mode = "fixed";
  opt.kpi_seed = config.seed;
  opt.log = &result.log;
  run_schedule(config, tl.trace, tl.windows, tl.campaign_start, config.rounds, tuners, opt);
  result.metrics = evaluate_run(result.log);
  return result;
}

/// All carriers permanently on: rho = [0, 0] deployed every round.
inline CampaignResult run_baseline(const ScenarioConfig& config) {
  const Timeline tl = prepare_timeline(config);
  TunerSet tuners;
  for (std::size_t w = 0; w < tl.windows.count(); ++w)
    tuners.push_back(std::make_unique<FixedTuner>(std::vector{0.0}));
  CampaignResult result;
  result.log = make_log_header(config, tl.windows, "baseline");
  ScheduleOptions opt;
  opt.mode = "baseline";
  opt.forced_thresholds = ThresholdPair{0.0, 0.0};
  opt.kpi_seed = config.seed;
  opt.log = &result.log;
  run_schedule(config, tl.trace, tl.windows, tl.campaign_start, config.rounds, tuners, opt);
  result.metrics = evaluate_run(result.log);
  return result;
}

// ---------------------------------------------------------------------------
// Brute-force threshold sweep

struct SweepResult {
  DayWindows windows;
  std::vector<double> xs;
  std::vector<std::vector<double>> acceptance;  ///< [window][x]
  std::vector<std::vector<std::size_t>> samples;  ///< [window][x]
  std::vector<double> avg_watts;  ///< [x]
  std::vector<double> x_star;     ///< per window: largest x minimising |acceptance - xi|
};

/// Largest grid x minimising |curve(x) - xi|.
inline double constrained_optimum(std::span<const double> xs, std::span<const double> curve, double xi) {
  double best_x = xs.front();
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double gap = std::abs(curve[i] - xi);
    if (gap <= best_gap + 1e-12) {
      best_gap = std::min(gap, best_gap);
      best_x = xs[i];
    }
  }
  return best_x;
}

/// Simulates every x on the sweep grid for `days` days with fixed thresholds,
/// using common random numbers (same trace and KPI stream for every x).
inline SweepResult sweep_x(const ScenarioConfig& config, double x_step, std::size_t days) {
  const Timeline tl = prepare_timeline(config);
  TrafficTrace trace;
  if (config.trace_csv.empty()) {
    auto rng = make_stream(config.seed, streams::sweep_trace);
    trace = generate_trace(config.traffic, days + 1, config.tick_seconds, rng);
  } else {
    trace = tl.trace;
  }
  const std::size_t start = static_cast<std::size_t>(tl.windows.boundaries.front()) * config.ticks_per_hour();
  if (!config.trace_csv.empty())
    days = std::min(days, (trace.size() - start) / config.ticks_per_day());

  SweepResult r;
  r.windows = tl.windows;
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / x_step));
  for (std::size_t k = 0; k <= steps; ++k)
    r.xs.push_back(std::min(1.0, static_cast<double>(k) / static_cast<double>(steps)));
  r.acceptance.assign(tl.windows.count(), std::vector<double>(r.xs.size(), 0.0));
  r.samples.assign(tl.windows.count(), std::vector<std::size_t>(r.xs.size(), 0));
  std::vector<std::vector<KpiBatch>> batches;
  for (std::size_t i = 0; i < r.xs.size(); ++i) {
    TunerSet tuners;
    for (std::size_t w = 0; w < tl.windows.count(); ++w)
      tuners.push_back(std::make_unique<FixedTuner>(std::vector{r.xs[i]}));
    ScheduleOptions opt;
    opt.mode = "sweep";
    opt.kpi_seed = config.seed;
    opt.kpi_stream = streams::sweep_kpi;
    opt.batches = &batches;
    const double energy = run_schedule(config, trace, tl.windows, start, days, tuners, opt);
    r.avg_watts.push_back(energy / (static_cast<double>(days) * 86400.0));
    for (std::size_t w = 0; w < batches.size(); ++w) {
      std::size_t n = 0, s = 0;
      for (const auto& b : batches[w]) {
        n += b.size();
        s += b.successes();
      }
      r.samples[w][i] = n;
      r.acceptance[w][i] = n == 0 ? 0.0 : static_cast<double>(s) / static_cast<double>(n);
    }
  }
  for (std::size_t w = 0; w < tl.windows.count(); ++w)
    r.x_star.push_back(constrained_optimum(r.xs, r.acceptance[w], config.xi));
  return r;
}

// ---------------------------------------------------------------------------
// Bayesian vs stochastic approximation

struct CompareRow {
  std::uint64_t seed{0};
  std::string method;
  std::size_t window{0};
  std::size_t round{0};
  double x{0.0};
  double abs_error{0.0};
  double shortfall{0.0};  ///< max(0, xi - batch mean)
  double cumulative_energy_j{0.0};
};

struct MethodSummary {
  std::string method;
  double mean_rounds_to_converge{0.0};  ///< +inf if any campaign never converged
  double converged_fraction{0.0};
  double mean_final_acceptance{0.0};    ///< over the last min(10, rounds) rounds
  double mean_energy_j{0.0};
  std::vector<double> rounds_to_converge;  ///< per (seed, window)
};

struct CompareReport {
  SweepResult sweep;
  double tolerance{0.05};
  std::vector<CompareRow> rows;
  MethodSummary bayes;
  MethodSummary sa;
};

/// First round index with |x_k - x*| <= tol, or +inf.
inline double rounds_to_converge(std::span<const double> xs, double x_star, double tol) {
  for (std::size_t k = 0; k < xs.size(); ++k)
    if (std::abs(xs[k] - x_star) <= tol + 1e-12) return static_cast<double>(k);
  return std::numeric_limits<double>::infinity();
}

inline CompareReport compare_tuners(const ScenarioConfig& config, std::span<const std::uint64_t> seeds,
                                    double tolerance = 0.05) {
  CompareReport report;
  report.tolerance = tolerance;
  report.sweep = sweep_x(config, config.sweep.x_step, config.sweep.days);
  const auto& x_star = report.sweep.x_star;

  auto summarize = [&](MethodSummary& s, const std::string& method) {
    s.method = method;
    std::size_t converged = 0;
    double sum = 0.0;
    for (double r : s.rounds_to_converge) {
      if (std::isfinite(r)) ++converged;
      sum += r;
    }
    const auto n = static_cast<double>(s.rounds_to_converge.size());
    s.mean_rounds_to_converge = sum / n;
    s.converged_fraction = static_cast<double>(converged) / n;
  };

  auto absorb = [&](MethodSummary& s, const CampaignResult& run, std::uint64_t seed) {
    const std::size_t windows = run.log.windows.count();
    std::vector<std::vector<double>> xs(windows);
    std::vector<std::size_t> tail_n(windows, 0), tail_s(windows, 0);
    const std::size_t rounds = config.rounds;
    const std::size_t tail_from = rounds > 10 ? rounds - 10 : 0;
    for (const auto& r : run.log.rounds) {
      xs[r.window].push_back(r.x);
      report.rows.push_back({seed, s.method, r.window, r.round, r.x, std::abs(r.x - x_star[r.window]),
                             std::max(0.0, run.log.xi - r.batch_mean()), r.cumulative_energy_j});
      if (r.round >= tail_from) {
        tail_n[r.window] += r.samples;
        tail_s[r.window] += r.successes;
      }
    }
    for (std::size_t w = 0; w < windows; ++w) {
      s.rounds_to_converge.push_back(rounds_to_converge(xs[w], x_star[w], tolerance));
      s.mean_final_acceptance += tail_n[w] == 0 ? 0.0 : static_cast<double>(tail_s[w]) / tail_n[w];
    }
    s.mean_energy_j += run.metrics.overall.energy_j;
  };

  report.bayes.method = "bayes";
  report.sa.method = "sa";
  for (auto seed : seeds) {
    ScenarioConfig c = config;
    c.seed = seed;
    absorb(report.bayes, run_closed_loop(c), seed);
    absorb(report.sa, run_sa_campaign(c), seed);
  }
  for (auto* s : {&report.bayes, &report.sa}) {
    const double campaigns = static_cast<double>(s->rounds_to_converge.size());
    s->mean_final_acceptance /= campaigns;
    s->mean_energy_j /= static_cast<double>(seeds.size());
    summarize(*s, s->method);
  }
  return report;
}

// ---------------------------------------------------------------------------
// Learner against a known acceptance curve (no sector simulation)

struct GenerativeCampaign {
  GridSpec grid;
  DriftKernel drift;
  double xi{0.89};
  double x_step{0.01};
  std::size_t rounds{30};
  std::size_t samples_per_round{48};
  std::uint64_t seed{1};
  std::vector<KpiBatch> history;
  double sa_x0{0.5};
  double sa_eps0{0.5};
};

struct GenerativeTrace {
  std::vector<double> x;         ///< proposal per round
  std::vector<double> true_p;    ///< true acceptance probability at x
  std::vector<double> batch_mean;
  std::vector<double> expected;  ///< belief E[p(x)] (NaN for SA)
};

/// `true_curve(round, x)` gives the acceptance probability in force at that round.
template <class TrueCurve>
GenerativeTrace run_generative(const GenerativeCampaign& cfg, WindowTuner& tuner, TrueCurve&& true_curve) {
  auto rng = make_stream(cfg.seed, streams::generative);
  GenerativeTrace out;
  for (std::size_t k = 0; k < cfg.rounds; ++k) {
    const double x = tuner.propose();
    const double p = true_curve(k, x);
    std::bernoulli_distribution draw(std::clamp(p, 0.0, 1.0));
    KpiBatch batch{x, {}, 0, k};
    batch.samples.reserve(cfg.samples_per_round);
    for (std::size_t i = 0; i < cfg.samples_per_round; ++i) batch.samples.push_back(draw(rng) ? 1 : 0);
    out.x.push_back(x);
    out.true_p.push_back(p);
    out.batch_mean.push_back(batch.mean());
    out.expected.push_back(tuner.expected_acceptance());
    tuner.observe(batch);
  }
  return out;
}

template <class TrueCurve>
GenerativeTrace run_generative_bayes(const GenerativeCampaign& cfg, TrueCurve&& true_curve) {
  BayesTuner tuner(init_prior(cfg.grid, cfg.history), cfg.drift, cfg.xi, cfg.x_step);
  return run_generative(cfg, tuner, std::forward<TrueCurve>(true_curve));
}

template <class TrueCurve>
GenerativeTrace run_generative_sa(const GenerativeCampaign& cfg, TrueCurve&& true_curve) {
  SaTuner tuner(cfg.sa_x0, cfg.sa_eps0, cfg.xi);
  return run_generative(cfg, tuner, std::forward<TrueCurve>(true_curve));
}

}  // namespace cellsleep
