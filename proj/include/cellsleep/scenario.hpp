#pragma once

// Scenario configuration and its JSON form.

#include "cellsleep/bayes_tuner.hpp"
#include "cellsleep/errors.hpp"
#include "cellsleep/power_model.hpp"
#include "cellsleep/shutdown_policy.hpp"
#include "cellsleep/traffic_sim.hpp"
#include "cellsleep/window_split.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

namespace cellsleep {

struct SectorConfig {
  std::vector<CarrierSpec> carriers;   ///< carrier index = position
  std::vector<CarrierIndex> order;     ///< activation order; shutdown pops from the back
  std::size_t coverage_floor{1};
  PaMap pa_map;

  double total_weight() const {
    double w = 0.0;
    for (const auto& c : carriers) w += c.capacity_weight;
    return w;
  }
  std::size_t eligible_count() const { return carriers.size() - coverage_floor; }

  void validate() const {
    if (carriers.empty()) throw ConfigError("sector: no carriers");
    for (std::size_t i = 0; i < carriers.size(); ++i) {
      if (!(carriers[i].capacity_weight > 0.0)) throw ConfigError("sector: capacity weight must be positive");
      for (std::size_t j = 0; j < i; ++j) {
        if (carriers[i].frequency_mhz == carriers[j].frequency_mhz)
          throw ConfigError("sector: duplicate carrier frequency");
        if (carriers[i].id == carriers[j].id) throw ConfigError("sector: duplicate carrier id " + carriers[i].id);
      }
    }
    if (order.size() != carriers.size()) throw ConfigError("sector: order must list every carrier once");
    std::vector<bool> seen(carriers.size(), false);
    for (auto c : order) {
      if (c >= carriers.size() || seen[c]) throw ConfigError("sector: order must list every carrier once");
      seen[c] = true;
    }
    if (coverage_floor < 1 || coverage_floor > carriers.size())
      throw ConfigError("sector: coverage floor must be in [1, carrier count]");
    if (pa_map.carrier_count() != carriers.size()) throw ConfigError("sector: every carrier needs a PA");
    pa_map.validate();
  }
};

struct WindowConfig {
  bool auto_split{true};
  DayWindows fixed;
  int n_max{4};
  int min_len{4};
};

/// Days replayed at fixed x before the campaign to seed the prior (and, with
/// auto_split, to pick the windows). x values are cycled one per day.
struct HistoryConfig {
  std::size_t days{14};
  std::vector<double> x_values{0.0};
};

struct SaConfig {
  double x0{0.5};
  double eps0{0.5};
};

struct SweepConfig {
  double x_step{0.01};
  std::size_t days{1500};
};

struct ScenarioConfig {
  std::string name{"reference"};
  SectorConfig sector;
  MeanLoadMode mean_load_mode{MeanLoadMode::capacity_weighted};
  std::vector<KpiModel> kpis{KpiModel{}};
  std::vector<double> targets{5.0};
  DiurnalProfile traffic;
  std::string trace_csv;  ///< replay instead of generating when set
  double xi{0.89};
  SearchRegion region;
  GridSpec grid;
  double x_step{0.01};
  DriftKernel drift{0.01, 0.02};
  WindowConfig windows;
  HistoryConfig history;
  double tick_seconds{60.0};
  double collection_seconds{900.0};
  std::size_t rounds{30};
  std::uint64_t seed{1};
  SaConfig sa;
  SweepConfig sweep;
  std::vector<std::string> prior_checkpoints;  ///< one per window, resumes a campaign

  std::size_t ticks_per_day() const { return static_cast<std::size_t>(std::llround(86400.0 / tick_seconds)); }
  std::size_t ticks_per_hour() const { return static_cast<std::size_t>(std::llround(3600.0 / tick_seconds)); }
  std::size_t ticks_per_collection() const {
    return static_cast<std::size_t>(std::llround(collection_seconds / tick_seconds));
  }

  void validate() const {
    sector.validate();
    if (kpis.size() != targets.size()) throw ConfigError("scenario: one target per KPI required");
    for (const auto& k : kpis) k.validate();
    traffic.validate();
    if (!(xi >= 0.0 && xi <= 1.0)) throw ConfigError("scenario: xi must be in [0,1]");
    region.validate();
    grid.validate();
    if (!(x_step > 0.0 && x_step <= 1.0)) throw ConfigError("scenario: x_step must be in (0,1]");
    drift.validate();
    if (!windows.auto_split) windows.fixed.validate();
    if (windows.auto_split && history.days == 0)
      throw ConfigError("scenario: automatic window split needs history days");
    if (windows.n_max < 1 || windows.min_len < 1) throw ConfigError("scenario: bad window split bounds");
    for (double x : history.x_values)
      if (!(x >= 0.0 && x <= 1.0)) throw ConfigError("scenario: history x outside [0,1]");
    if (history.days > 0 && history.x_values.empty()) throw ConfigError("scenario: history needs x values");
    if (!(tick_seconds > 0.0) || std::fmod(3600.0, tick_seconds) != 0.0)
      throw ConfigError("scenario: tick length must divide one hour");
    if (!(collection_seconds >= tick_seconds))
      throw ConfigError("scenario: KPI collection period must be at least one tick");
    if (std::fmod(collection_seconds, tick_seconds) != 0.0 || std::fmod(3600.0, collection_seconds) != 0.0)
      throw ConfigError("scenario: collection period must be a whole number of ticks dividing one hour");
    if (rounds == 0) throw ConfigError("scenario: rounds must be positive");
    if (!(sa.x0 >= 0.0 && sa.x0 <= 1.0) || !(sa.eps0 > 0.0)) throw ConfigError("scenario: bad SA settings");
    if (!(sweep.x_step > 0.0 && sweep.x_step <= 1.0) || sweep.days == 0)
      throw ConfigError("scenario: bad sweep settings");
  }
};

/// Four-layer sector (800/1800/2100/2600 MHz), one PA per carrier, shut down
/// in decreasing frequency order.
inline SectorConfig reference_sector() {
  SectorConfig s;
  s.carriers = {{"L800", 800.0, 1.0}, {"L1800", 1800.0, 2.0}, {"L2100", 2100.0, 1.5}, {"L2600", 2600.0, 2.0}};
  s.order = {0, 1, 2, 3};
  s.coverage_floor = 1;
  s.pa_map.pa_of_carrier = {0, 1, 2, 3};
  s.pa_map.curve_of_pa = std::vector<PowerCurve>(4, PowerCurve{});
  return s;
}

/// Reference sector under a day/night diurnal trace; windows are split
/// automatically into at most two.
inline ScenarioConfig reference_scenario() {
  ScenarioConfig c;
  c.sector = reference_sector();
  c.windows.n_max = 2;
  return c;
}

// ---------------------------------------------------------------------------
// JSON

namespace detail {

using nlohmann::json;

template <class T>
void read_opt(const json& j, const char* key, T& out) {
  if (j.contains(key)) j.at(key).get_to(out);
}

inline std::vector<CarrierIndex> default_order(const std::vector<CarrierSpec>& carriers) {
  std::vector<CarrierIndex> order(carriers.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto l, auto r) { return carriers[l].frequency_mhz < carriers[r].frequency_mhz; });
  return order;
}

inline ThresholdPair pair_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw ConfigError("threshold pair must be [rho_min, rho_max]");
  return {j[0].get<double>(), j[1].get<double>()};
}

}  // namespace detail

inline SectorConfig sector_from_json(const nlohmann::json& j) {
  SectorConfig s;
  const auto& carriers = j.at("carriers");
  for (const auto& c : carriers) {
    CarrierSpec spec;
    spec.id = c.at("id").get<std::string>();
    spec.frequency_mhz = c.at("frequency_mhz").get<double>();
    detail::read_opt(c, "capacity_weight", spec.capacity_weight);
    s.carriers.push_back(spec);
    s.pa_map.pa_of_carrier.push_back(c.value("pa", s.pa_map.pa_of_carrier.size()));
  }
  if (j.contains("pas")) {
    for (const auto& p : j.at("pas")) {
      PowerCurve curve;
      detail::read_opt(p, "slope", curve.slope);
      detail::read_opt(p, "idle", curve.idle);
      detail::read_opt(p, "sleep", curve.sleep);
      s.pa_map.curve_of_pa.push_back(curve);
    }
  } else {
    s.pa_map.curve_of_pa.assign(s.carriers.size(), PowerCurve{});
  }
  if (j.contains("order")) {
    for (const auto& id : j.at("order")) {
      const auto name = id.get<std::string>();
      auto it = std::find_if(s.carriers.begin(), s.carriers.end(), [&](const auto& c) { return c.id == name; });
      if (it == s.carriers.end()) throw ConfigError("sector order: unknown carrier " + name);
      s.order.push_back(static_cast<CarrierIndex>(it - s.carriers.begin()));
    }
  } else {
    s.order = detail::default_order(s.carriers);
  }
  detail::read_opt(j, "coverage_floor", s.coverage_floor);
  return s;
}

inline nlohmann::json sector_to_json(const SectorConfig& s) {
  nlohmann::json j;
  for (std::size_t i = 0; i < s.carriers.size(); ++i) {
    const auto& c = s.carriers[i];
    j["carriers"].push_back({{"id", c.id},
                             {"frequency_mhz", c.frequency_mhz},
                             {"capacity_weight", c.capacity_weight},
                             {"pa", s.pa_map.pa_of_carrier[i]}});
  }
  for (const auto& p : s.pa_map.curve_of_pa)
    j["pas"].push_back({{"slope", p.slope}, {"idle", p.idle}, {"sleep", p.sleep}});
  for (auto c : s.order) j["order"].push_back(s.carriers[c].id);
  j["coverage_floor"] = s.coverage_floor;
  return j;
}

/// Missing keys keep the reference defaults.
inline ScenarioConfig scenario_from_json(const nlohmann::json& j) {
  using detail::read_opt;
  ScenarioConfig c = reference_scenario();
  try {
    read_opt(j, "name", c.name);
    if (j.contains("sector")) c.sector = sector_from_json(j.at("sector"));
    if (j.contains("mean_load")) {
      const auto mode = j.at("mean_load").get<std::string>();
      if (mode == "capacity_weighted") c.mean_load_mode = MeanLoadMode::capacity_weighted;
      else if (mode == "unweighted") c.mean_load_mode = MeanLoadMode::unweighted;
      else throw ConfigError("mean_load must be 'capacity_weighted' or 'unweighted'");
    }
    if (j.contains("kpis")) {
      c.kpis.clear();
      c.targets.clear();
      for (const auto& k : j.at("kpis")) {
        KpiModel m;
        read_opt(k, "name", m.name);
        read_opt(k, "base", m.base);
        read_opt(k, "load_sensitivity", m.load_sensitivity);
        read_opt(k, "cqi_sensitivity", m.cqi_sensitivity);
        read_opt(k, "noise_scale", m.noise_scale);
        const double target = k.at("target").get<double>();
        m.pivot = k.value("pivot", target);
        c.kpis.push_back(m);
        c.targets.push_back(target);
      }
    }
    if (j.contains("traffic")) {
      const auto& t = j.at("traffic");
      auto& p = c.traffic;
      read_opt(t, "day_start_hour", p.day_start_hour);
      read_opt(t, "day_end_hour", p.day_end_hour);
      read_opt(t, "day_demand", p.day_demand);
      read_opt(t, "night_demand", p.night_demand);
      read_opt(t, "swing", p.swing);
      read_opt(t, "demand_noise", p.demand_noise);
      read_opt(t, "daily_level_std", p.daily_level_std);
      read_opt(t, "day_cqi", p.day_cqi);
      read_opt(t, "night_cqi", p.night_cqi);
      read_opt(t, "cqi_noise", p.cqi_noise);
      read_opt(t, "trace_csv", c.trace_csv);
    }
    read_opt(j, "xi", c.xi);
    if (j.contains("search_region")) {
      c.region.lo = detail::pair_from_json(j.at("search_region").at("lo"));
      c.region.hi = detail::pair_from_json(j.at("search_region").at("hi"));
    }
    if (j.contains("grid")) {
      const auto& g = j.at("grid");
      read_opt(g, "a_min", c.grid.a_min);
      read_opt(g, "a_max", c.grid.a_max);
      read_opt(g, "a_nodes", c.grid.a_nodes);
      read_opt(g, "b_min", c.grid.b_min);
      read_opt(g, "b_max", c.grid.b_max);
      read_opt(g, "b_nodes", c.grid.b_nodes);
      read_opt(g, "x_step", c.x_step);
    }
    if (j.contains("drift")) {
      read_opt(j.at("drift"), "std_a", c.drift.std_a);
      read_opt(j.at("drift"), "std_b", c.drift.std_b);
    }
    if (j.contains("windows")) {
      const auto& w = j.at("windows");
      if (w.contains("boundaries")) {
        c.windows.auto_split = false;
        w.at("boundaries").get_to(c.windows.fixed.boundaries);
      } else {
        c.windows.auto_split = true;
      }
      read_opt(w, "n_max", c.windows.n_max);
      read_opt(w, "min_len", c.windows.min_len);
    }
    if (j.contains("history")) {
      read_opt(j.at("history"), "days", c.history.days);
      read_opt(j.at("history"), "x_values", c.history.x_values);
    }
    read_opt(j, "tick_seconds", c.tick_seconds);
    if (j.contains("collection_minutes")) c.collection_seconds = 60.0 * j.at("collection_minutes").get<double>();
    read_opt(j, "rounds", c.rounds);
    read_opt(j, "seed", c.seed);
    if (j.contains("sa")) {
      read_opt(j.at("sa"), "x0", c.sa.x0);
      read_opt(j.at("sa"), "eps0", c.sa.eps0);
    }
    if (j.contains("sweep")) {
      read_opt(j.at("sweep"), "x_step", c.sweep.x_step);
      read_opt(j.at("sweep"), "days", c.sweep.days);
    }
    read_opt(j, "prior_checkpoints", c.prior_checkpoints);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("scenario json: ") + e.what());
  }
  c.validate();
  return c;
}

inline nlohmann::json scenario_to_json(const ScenarioConfig& c) {
  nlohmann::json j;
  j["name"] = c.name;
  j["sector"] = sector_to_json(c.sector);
  j["mean_load"] = c.mean_load_mode == MeanLoadMode::capacity_weighted ? "capacity_weighted" : "unweighted";
  for (std::size_t i = 0; i < c.kpis.size(); ++i) {
    const auto& m = c.kpis[i];
    j["kpis"].push_back({{"name", m.name},
                         {"target", c.targets[i]},
                         {"pivot", m.pivot},
                         {"base", m.base},
                         {"load_sensitivity", m.load_sensitivity},
                         {"cqi_sensitivity", m.cqi_sensitivity},
                         {"noise_scale", m.noise_scale}});
  }
  const auto& p = c.traffic;
  j["traffic"] = {{"day_start_hour", p.day_start_hour}, {"day_end_hour", p.day_end_hour},
                  {"day_demand", p.day_demand},         {"night_demand", p.night_demand},
                  {"swing", p.swing},                   {"demand_noise", p.demand_noise},
                  {"daily_level_std", p.daily_level_std}, {"day_cqi", p.day_cqi},
                  {"night_cqi", p.night_cqi},           {"cqi_noise", p.cqi_noise}};
  if (!c.trace_csv.empty()) j["traffic"]["trace_csv"] = c.trace_csv;
  j["xi"] = c.xi;
  j["search_region"] = {{"lo", {c.region.lo.rho_min, c.region.lo.rho_max}},
                        {"hi", {c.region.hi.rho_min, c.region.hi.rho_max}}};
  j["grid"] = {{"a_min", c.grid.a_min}, {"a_max", c.grid.a_max}, {"a_nodes", c.grid.a_nodes},
               {"b_min", c.grid.b_min}, {"b_max", c.grid.b_max}, {"b_nodes", c.grid.b_nodes},
               {"x_step", c.x_step}};
  j["drift"] = {{"std_a", c.drift.std_a}, {"std_b", c.drift.std_b}};
  if (c.windows.auto_split) j["windows"] = {{"n_max", c.windows.n_max}, {"min_len", c.windows.min_len}};
  else j["windows"] = {{"boundaries", c.windows.fixed.boundaries}};
  j["history"] = {{"days", c.history.days}, {"x_values", c.history.x_values}};
  j["tick_seconds"] = c.tick_seconds;
  j["collection_minutes"] = c.collection_seconds / 60.0;
  j["rounds"] = c.rounds;
  j["seed"] = c.seed;
  j["sa"] = {{"x0", c.sa.x0}, {"eps0", c.sa.eps0}};
  j["sweep"] = {{"x_step", c.sweep.x_step}, {"days", c.sweep.days}};
  if (!c.prior_checkpoints.empty()) j["prior_checkpoints"] = c.prior_checkpoints;
  return j;
}

inline ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config file " + path + ": " + e.what());
  }
  auto config = scenario_from_json(j);
  // Relative file references are taken from the config's directory.
  const auto base = std::filesystem::path(path).parent_path();
  auto rebase = [&](std::string& file) {
    if (!file.empty() && std::filesystem::path(file).is_relative()) file = (base / file).string();
  };
  rebase(config.trace_csv);
  for (auto& p : config.prior_checkpoints) rebase(p);
  return config;
}

}  // namespace cellsleep
