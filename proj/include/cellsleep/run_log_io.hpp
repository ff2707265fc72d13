#pragma once

// On-disk form of a run: a directory with
//   meta.json     run header (mode, xi, windows, carriers, KPI names, warnings)
//   ticks.csv     one row per tick
//   samples.csv   one row per KPI sample (carrier, acceptance, raw KPI values)
//   rounds.csv    one row per (window, round)
//   summary.json  evaluate_run() metrics
//   belief_w<N>.txt  final belief per window (Bayesian runs)

#include "cellsleep/bayes_tuner.hpp"
#include "cellsleep/errors.hpp"
#include "cellsleep/orchestrator.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace cellsleep {

namespace fs = std::filesystem;

inline nlohmann::json metrics_to_json(const WindowMetrics& m) {
  auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  return {{"avg_watts", m.avg_watts},   {"energy_j", m.energy_j},
          {"duration_s", m.duration_s}, {"acceptance", num(m.acceptance)},
          {"samples", m.samples},       {"sleep_time_pct", m.sleep_time_pct},
          {"kpi_low_quantile", num(m.kpi_low_quantile)}};
}

inline nlohmann::json metrics_to_json(const RunMetrics& m) {
  nlohmann::json j;
  j["overall"] = metrics_to_json(m.overall);
  j["per_window"] = nlohmann::json::array();
  for (const auto& w : m.per_window) j["per_window"].push_back(metrics_to_json(w));
  return j;
}

namespace detail {

inline std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream row(line);
  while (std::getline(row, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

inline std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p);
  if (!out) throw ConfigError("cannot write " + p.string());
  out.precision(17);
  return out;
}

inline std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot read " + p.string());
  return in;
}

}  // namespace detail

inline void write_run(const fs::path& dir, const RunLog& log, const RunMetrics& metrics,
                      const std::vector<ParamBelief>& beliefs = {}) {
  fs::create_directories(dir);
  nlohmann::json meta = {{"mode", log.mode},
                         {"xi", log.xi},
                         {"tick_seconds", log.tick_seconds},
                         {"windows", log.windows.boundaries},
                         {"carriers", log.carrier_ids},
                         {"coverage_floor", log.coverage_floor},
                         {"kpis", log.kpi_names},
                         {"warnings", log.warnings}};
  detail::open_out(dir / "meta.json") << meta.dump(2) << '\n';

  {
    auto out = detail::open_out(dir / "ticks.csv");
    out << "tick,hour,window,active_count,demand,cqi,mean_load,overflow,watts";
    for (const auto& id : log.carrier_ids) out << ",load_" << id;
    out << ",observed,accepted\n";
    for (const auto& t : log.ticks) {
      out << t.tick << ',' << t.hour << ',' << t.window << ',' << t.active_count << ',' << t.demand << ',' << t.cqi
          << ',' << t.mean_load << ',' << t.overflow << ',' << t.watts;
      for (double l : t.loads) out << ',' << l;
      out << ',' << t.observed << ',' << t.accepted << '\n';
    }
  }
  {
    auto out = detail::open_out(dir / "samples.csv");
    out << "tick,carrier,accepted";
    for (const auto& k : log.kpi_names) out << ',' << k;
    out << '\n';
    for (const auto& s : log.samples) {
      out << s.tick << ',' << log.carrier_ids.at(s.carrier) << ',' << (s.accepted ? 1 : 0);
      for (double v : s.kpis) out << ',' << v;
      out << '\n';
    }
  }
  {
    auto out = detail::open_out(dir / "rounds.csv");
    out << "window,round,x,rho_min,rho_max,samples,successes,batch_mean,expected_acceptance,degenerate,"
           "cumulative_energy_j,checkpoint\n";
    for (const auto& r : log.rounds) {
      std::string checkpoint = r.checkpoint;
      if (checkpoint.empty() && r.window < beliefs.size() && r.round == log.rounds.back().round)
        checkpoint = "belief_w" + std::to_string(r.window) + ".txt";
      out << r.window << ',' << r.round << ',' << r.x << ',' << r.thresholds.rho_min << ',' << r.thresholds.rho_max
          << ',' << r.samples << ',' << r.successes << ',' << r.batch_mean() << ',';
      if (std::isfinite(r.expected_acceptance)) out << r.expected_acceptance;
      out << ',' << (r.degenerate ? 1 : 0) << ',' << r.cumulative_energy_j << ',' << checkpoint << '\n';
    }
  }
  for (std::size_t w = 0; w < beliefs.size(); ++w) {
    auto out = detail::open_out(dir / ("belief_w" + std::to_string(w) + ".txt"));
    write_belief(out, beliefs[w]);
  }
  detail::open_out(dir / "summary.json") << metrics_to_json(metrics).dump(2) << '\n';
}

/// Rebuilds a RunLog from a run directory (meta.json, ticks.csv, optional
/// samples.csv and rounds.csv).
inline RunLog read_run(const fs::path& dir) {
  RunLog log;
  try {
    nlohmann::json meta;
    detail::open_in(dir / "meta.json") >> meta;
    log.mode = meta.at("mode").get<std::string>();
    log.xi = meta.at("xi").get<double>();
    log.tick_seconds = meta.at("tick_seconds").get<double>();
    log.windows.boundaries = meta.at("windows").get<std::vector<int>>();
    log.carrier_ids = meta.at("carriers").get<std::vector<std::string>>();
    log.coverage_floor = meta.at("coverage_floor").get<std::size_t>();
    log.kpi_names = meta.at("kpis").get<std::vector<std::string>>();
    log.warnings = meta.value("warnings", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("meta.json: " + std::string(e.what()));
  }
  const std::size_t nc = log.carrier_ids.size();
  std::string line;
  try {
    auto in = detail::open_in(dir / "ticks.csv");
    std::getline(in, line);
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      const auto f = detail::split_csv(line);
      if (f.size() != 11 + nc) throw ConfigError("ticks.csv: wrong column count");
      TickRecord t;
      t.tick = std::stoull(f[0]);
      t.hour = std::stoi(f[1]);
      t.window = std::stoull(f[2]);
      t.active_count = std::stoull(f[3]);
      t.demand = std::stod(f[4]);
      t.cqi = std::stod(f[5]);
      t.mean_load = std::stod(f[6]);
      t.overflow = std::stod(f[7]);
      t.watts = std::stod(f[8]);
      for (std::size_t c = 0; c < nc; ++c) t.loads.push_back(std::stod(f[9 + c]));
      t.observed = static_cast<std::uint32_t>(std::stoul(f[9 + nc]));
      t.accepted = static_cast<std::uint32_t>(std::stoul(f[10 + nc]));
      log.ticks.push_back(std::move(t));
    }
    if (fs::exists(dir / "samples.csv")) {
      auto sin = detail::open_in(dir / "samples.csv");
      std::getline(sin, line);
      while (std::getline(sin, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 3 + log.kpi_names.size()) throw ConfigError("samples.csv: wrong column count");
        KpiSampleRecord s;
        s.tick = std::stoull(f[0]);
        auto it = std::find(log.carrier_ids.begin(), log.carrier_ids.end(), f[1]);
        if (it == log.carrier_ids.end()) throw ConfigError("samples.csv: unknown carrier " + f[1]);
        s.carrier = static_cast<CarrierIndex>(it - log.carrier_ids.begin());
        s.accepted = f[2] == "1";
        for (std::size_t k = 3; k < f.size(); ++k) s.kpis.push_back(std::stod(f[k]));
        log.samples.push_back(std::move(s));
      }
    }
    if (fs::exists(dir / "rounds.csv")) {
      auto rin = detail::open_in(dir / "rounds.csv");
      std::getline(rin, line);
      while (std::getline(rin, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv(line);
        if (f.size() != 12) throw ConfigError("rounds.csv: wrong column count");
        RoundRecord r;
        r.window = std::stoull(f[0]);
        r.round = std::stoull(f[1]);
        r.x = std::stod(f[2]);
        r.thresholds = {std::stod(f[3]), std::stod(f[4])};
        r.samples = std::stoull(f[5]);
        r.successes = std::stoull(f[6]);
        if (!f[8].empty()) r.expected_acceptance = std::stod(f[8]);
        r.degenerate = f[9] == "1";
        r.cumulative_energy_j = std::stod(f[10]);
        r.checkpoint = f[11];
        log.rounds.push_back(std::move(r));
      }
    }
  } catch (const std::logic_error& e) {
    throw ConfigError("run directory " + dir.string() + ": unparsable field (" + e.what() + ")");
  }
  return log;
}

}  // namespace cellsleep
