// cellsleep: command-line front end.
//
//   cellsleep windows  --trace trace.csv [--n-max 2] [--min-len 4]
//   cellsleep tune     [--config cfg.json] [--seed N] [--rounds K] [--out DIR]
//   cellsleep baseline [--config cfg.json] [--seed N] [--rounds K] [--out DIR]
//   cellsleep compare  [--config cfg.json] [--seeds 20] [--out DIR]
//   cellsleep report   --run DIR [--run DIR ...] --out DIR
//   cellsleep trace    [--config cfg.json] --days D --out trace.csv

#include "cellsleep/cellsleep.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace cellsleep;
using nlohmann::json;

namespace {

struct CommonOpts {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> rounds;
  std::string out;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_out = true) {
  cmd->add_option("--config", o.config, "scenario JSON (default: built-in reference scenario)");
  cmd->add_option("--seed", o.seed, "override the scenario seed");
  cmd->add_option("--rounds", o.rounds, "override the number of rounds");
  if (with_out) cmd->add_option("--out", o.out, "output directory");
}

ScenarioConfig load_config(const CommonOpts& o) {
  ScenarioConfig c = o.config.empty() ? reference_scenario() : load_scenario(o.config);
  if (o.seed) c.seed = *o.seed;
  if (o.rounds) c.rounds = *o.rounds;
  c.validate();
  return c;
}

std::ofstream open_file(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write " + p.string());
  out.precision(10);
  return out;
}

json num(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

void print_metrics(const std::string& label, const RunMetrics& m) {
  std::cout << label << ": avg_watts=" << m.overall.avg_watts << " sleep_time_pct=" << m.overall.sleep_time_pct
            << " acceptance=" << m.overall.acceptance << " samples=" << m.overall.samples << '\n';
  for (std::size_t w = 0; w < m.per_window.size(); ++w) {
    const auto& pw = m.per_window[w];
    std::cout << "  window " << w << ": avg_watts=" << pw.avg_watts << " sleep_time_pct=" << pw.sleep_time_pct
              << " acceptance=" << pw.acceptance << '\n';
  }
}

int cmd_windows(const std::string& trace_path, double tick_seconds, int n_max, int min_len, const std::string& out) {
  const auto trace = load_trace_csv(trace_path, tick_seconds);
  const auto buckets = cqi_by_hour(trace.cqi, tick_seconds);
  const auto r = split_day(buckets, n_max, min_len);
  json j = {{"boundaries", r.windows.boundaries}, {"objective", r.objective}};
  for (std::size_t i = 0; i < r.windows.count(); ++i)
    j["lengths"].push_back(r.windows.length(i));
  std::cout << j.dump(2) << '\n';
  if (!out.empty()) open_file(fs::path(out) / "windows.json") << j.dump(2) << '\n';
  return 0;
}

int cmd_campaign(const CommonOpts& o, bool baseline) {
  const auto config = load_config(o);
  const auto result = baseline ? run_baseline(config) : run_closed_loop(config);
  print_metrics(result.log.mode, result.metrics);
  for (const auto& w : result.log.warnings) std::cerr << "warning: " << w << '\n';
  if (!o.out.empty()) {
    write_run(o.out, result.log, result.metrics, result.beliefs);
    open_file(fs::path(o.out) / "config.json") << scenario_to_json(config).dump(2) << '\n';
  }
  return 0;
}

json summary_json(const MethodSummary& s) {
  json rtc = json::array();
  for (double r : s.rounds_to_converge) rtc.push_back(num(r));
  return {{"mean_rounds_to_converge", num(s.mean_rounds_to_converge)},
          {"converged_fraction", s.converged_fraction},
          {"mean_final_acceptance", s.mean_final_acceptance},
          {"mean_energy_j", s.mean_energy_j},
          {"rounds_to_converge", rtc}};
}

int cmd_compare(const CommonOpts& o, std::size_t n_seeds, double tolerance) {
  const auto config = load_config(o);
  std::vector<std::uint64_t> seeds(n_seeds);
  std::iota(seeds.begin(), seeds.end(), config.seed);
  const auto report = compare_tuners(config, seeds, tolerance);

  json summary = {{"seeds", seeds},
                  {"tolerance", tolerance},
                  {"windows", report.sweep.windows.boundaries},
                  {"x_star", report.sweep.x_star},
                  {"bayes", summary_json(report.bayes)},
                  {"sa", summary_json(report.sa)}};
  std::cout << "x*:";
  for (double x : report.sweep.x_star) std::cout << ' ' << x;
  std::cout << "\nbayes: mean rounds to |x-x*|<=" << tolerance << ": " << report.bayes.mean_rounds_to_converge
            << " (converged " << report.bayes.converged_fraction * 100.0 << "%)"
            << ", final acceptance " << report.bayes.mean_final_acceptance << '\n'
            << "sa:    mean rounds to |x-x*|<=" << tolerance << ": " << report.sa.mean_rounds_to_converge
            << " (converged " << report.sa.converged_fraction * 100.0 << "%)"
            << ", final acceptance " << report.sa.mean_final_acceptance << '\n';

  if (!o.out.empty()) {
    const fs::path dir(o.out);
    open_file(dir / "summary.json") << summary.dump(2) << '\n';
    auto rows = open_file(dir / "compare_rounds.csv");
    rows << "seed,method,window,round,x,abs_error,shortfall,cumulative_energy_j\n";
    for (const auto& r : report.rows)
      rows << r.seed << ',' << r.method << ',' << r.window << ',' << r.round << ',' << r.x << ',' << r.abs_error << ','
           << r.shortfall << ',' << r.cumulative_energy_j << '\n';
    auto sweep = open_file(dir / "sweep.csv");
    sweep << "x,avg_watts";
    for (std::size_t w = 0; w < report.sweep.windows.count(); ++w)
      sweep << ",acceptance_w" << w << ",samples_w" << w;
    sweep << '\n';
    for (std::size_t i = 0; i < report.sweep.xs.size(); ++i) {
      sweep << report.sweep.xs[i] << ',' << report.sweep.avg_watts[i];
      for (std::size_t w = 0; w < report.sweep.windows.count(); ++w)
        sweep << ',' << report.sweep.acceptance[w][i] << ',' << report.sweep.samples[w][i];
      sweep << '\n';
    }
  }
  return 0;
}

int cmd_report(const std::vector<std::string>& runs, const std::string& out) {
  json all = json::object();
  auto csv = open_file(fs::path(out) / "kpi_vs_sleep.csv");
  csv << "run,mode,window,sleep_time_pct,acceptance,kpi_low_quantile,avg_watts,energy_j,samples\n";
  auto row = [&](const std::string& run, const std::string& mode, const std::string& window, const WindowMetrics& m) {
    csv << run << ',' << mode << ',' << window << ',' << m.sleep_time_pct << ',';
    if (std::isfinite(m.acceptance)) csv << m.acceptance;
    csv << ',';
    if (std::isfinite(m.kpi_low_quantile)) csv << m.kpi_low_quantile;
    csv << ',' << m.avg_watts << ',' << m.energy_j << ',' << m.samples << '\n';
  };
  for (const auto& dir : runs) {
    const auto log = read_run(dir);
    const auto metrics = evaluate_run(log);
    const std::string name = fs::path(dir).filename().empty() ? fs::path(dir).parent_path().filename().string()
                                                              : fs::path(dir).filename().string();
    row(name, log.mode, "all", metrics.overall);
    for (std::size_t w = 0; w < metrics.per_window.size(); ++w) row(name, log.mode, std::to_string(w), metrics.per_window[w]);
    auto j = metrics_to_json(metrics);
    j["mode"] = log.mode;
    j["path"] = dir;
    all[name] = j;
    print_metrics(name + " (" + log.mode + ")", metrics);
  }
  open_file(fs::path(out) / "metrics.json") << all.dump(2) << '\n';
  return 0;
}

int cmd_trace(const CommonOpts& o, std::size_t days, const std::string& out) {
  const auto config = load_config(o);
  auto rng = make_stream(config.seed, streams::trace);
  const auto trace = generate_trace(config.traffic, days, config.tick_seconds, rng);
  auto file = open_file(out);
  write_trace_csv(file, trace);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cell sleep threshold tuning on a simulated sector"};
  app.require_subcommand(1);

  std::string trace_path, windows_out;
  double tick_seconds = 60.0;
  int n_max = 2, min_len = 4;
  auto* windows = app.add_subcommand("windows", "split the day into CQI-stable windows from a trace CSV");
  windows->add_option("--trace", trace_path, "trace CSV (tick,demand,cqi)")->required()->check(CLI::ExistingFile);
  windows->add_option("--tick-seconds", tick_seconds, "tick length of the trace")->capture_default_str();
  windows->add_option("--n-max", n_max, "maximum number of windows")->capture_default_str();
  windows->add_option("--min-len", min_len, "minimum window length in hours")->capture_default_str();
  windows->add_option("--out", windows_out, "directory for windows.json");

  CommonOpts tune_opts, base_opts, cmp_opts, trace_opts;
  auto* tune = app.add_subcommand("tune", "run the closed-loop Bayesian campaign");
  add_common(tune, tune_opts);
  auto* baseline = app.add_subcommand("baseline", "run the all-carriers-on baseline on the same trace");
  add_common(baseline, base_opts);

  std::size_t n_seeds = 20;
  double tolerance = 0.05;
  auto* compare = app.add_subcommand("compare", "Bayesian tuner vs stochastic approximation, with sweep oracle");
  add_common(compare, cmp_opts);
  compare->add_option("--seeds", n_seeds, "number of consecutive seeds, starting at the scenario seed")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  compare->add_option("--tolerance", tolerance, "convergence band around x*")->capture_default_str();

  std::vector<std::string> run_dirs;
  std::string report_out;
  auto* report = app.add_subcommand("report", "metrics and a KPI vs sleep-time CSV for saved runs");
  report->add_option("--run", run_dirs, "run directory written by tune/baseline")->required()->check(CLI::ExistingDirectory);
  report->add_option("--out", report_out, "output directory")->required();

  std::size_t trace_days = 30;
  std::string trace_out;
  auto* trace = app.add_subcommand("trace", "write a synthetic diurnal trace as CSV");
  add_common(trace, trace_opts, false);
  trace->add_option("--days", trace_days, "days to generate")->capture_default_str()->check(CLI::PositiveNumber);
  trace->add_option("--out", trace_out, "CSV file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*windows) return cmd_windows(trace_path, tick_seconds, n_max, min_len, windows_out);
    if (*tune) return cmd_campaign(tune_opts, false);
    if (*baseline) return cmd_campaign(base_opts, true);
    if (*compare) return cmd_compare(cmp_opts, n_seeds, tolerance);
    if (*report) return cmd_report(run_dirs, report_out);
    if (*trace) return cmd_trace(trace_opts, trace_days, trace_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
