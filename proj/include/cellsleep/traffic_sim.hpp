#pragma once

// Synthetic sector traffic: fluid demand over the active carriers, a CQI
// trace, and KPI samples whose acceptance odds fall with load and rise with
// CQI.

#include "cellsleep/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numbers>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

namespace cellsleep {

struct CarrierSpec {
  std::string id;
  double frequency_mhz{0.0};
  double capacity_weight{1.0};  ///< relative PRB capacity
};

/// Offered demand in units of the full-sector capacity (1.0 = every carrier
/// fully loaded) and mean CQI, one entry per tick.
struct TrafficTrace {
  double tick_seconds{60.0};
  std::vector<double> demand;
  std::vector<double> cqi;

  std::size_t size() const { return demand.size(); }

  void validate() const {
    if (!(tick_seconds > 0.0)) throw ConfigError("trace: tick duration must be positive");
    if (demand.size() != cqi.size()) throw ConfigError("trace: demand/cqi length mismatch");
    for (std::size_t t = 0; t < demand.size(); ++t) {
      if (!(demand[t] >= 0.0) || !std::isfinite(demand[t]))
        throw ConfigError("trace: negative or non-finite demand at tick " + std::to_string(t));
      if (!(cqi[t] >= 0.0 && cqi[t] <= 15.0))
        throw ConfigError("trace: cqi outside [0,15] at tick " + std::to_string(t));
    }
  }
};

/// Response of one KPI. The sample is pivot + noise_scale * (z + L) with
/// z = base - load_sensitivity * load + cqi_sensitivity * cqi and L standard
/// logistic, so P(kpi >= pivot) = 1 / (1 + exp(-z)).
struct KpiModel {
  std::string name{"dl_throughput_mbps"};
  double pivot{5.0};
  double base{1.851};
  double load_sensitivity{5.354};
  double cqi_sensitivity{0.3};
  double noise_scale{1.0};

  double logit(double load, double cqi) const { return base - load_sensitivity * load + cqi_sensitivity * cqi; }

  void validate() const {
    if (!(load_sensitivity >= 0.0)) throw ConfigError("kpi model: load sensitivity must be >= 0");
    if (!(noise_scale > 0.0)) throw ConfigError("kpi model: noise scale must be positive");
  }
};

enum class MeanLoadMode { capacity_weighted, unweighted };

struct Redistribution {
  std::vector<double> loads;  ///< aligned with the active list
  double overflow{0.0};       ///< clipped demand, in full-sector capacity units
};

/// Splits `demand` over `active` in proportion to capacity weight, writing one
/// load per active carrier into `loads_out`. Returns the clipped overflow.
inline double redistribute_into(double demand, std::span<const CarrierSpec> active, double sector_weight,
                                std::span<double> loads_out) {
  if (active.empty()) throw DomainError("redistribute: empty active set");
  if (!(demand >= 0.0)) throw DomainError("redistribute: negative demand");
  if (loads_out.size() < active.size()) throw DomainError("redistribute: output too small");
  double active_weight = 0.0;
  for (const auto& c : active) active_weight += c.capacity_weight;
  // Every active carrier receives the same utilisation before clipping.
  const double raw = demand * sector_weight / active_weight;
  double overflow = 0.0;
  for (std::size_t i = 0; i < active.size(); ++i) {
    const double load = std::min(raw, 1.0);
    loads_out[i] = load;
    overflow += (raw - load) * active[i].capacity_weight / sector_weight;
  }
  return overflow;
}

inline Redistribution redistribute(double demand, std::span<const CarrierSpec> active, double sector_weight) {
  Redistribution r;
  r.loads.resize(active.size());
  r.overflow = redistribute_into(demand, active, sector_weight, r.loads);
  return r;
}

inline double mean_load(std::span<const double> loads, std::span<const CarrierSpec> active,
                        MeanLoadMode mode = MeanLoadMode::capacity_weighted) {
  if (loads.size() < active.size()) throw DomainError("mean_load: missing loads");
  if (active.empty()) return 0.0;
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = 0; i < active.size(); ++i) {
    const double w = mode == MeanLoadMode::capacity_weighted ? active[i].capacity_weight : 1.0;
    num += w * loads[i];
    den += w;
  }
  return std::clamp(num / den, 0.0, 1.0);
}

inline double acceptance_probability(double load, double cqi, const KpiModel& model) {
  return 1.0 / (1.0 + std::exp(-model.logit(load, cqi)));
}

template <class Rng>
double sample_kpi(double load, double cqi, const KpiModel& model, Rng& rng) {
  if (!(load >= 0.0 && load <= 1.0)) throw DomainError("sample_kpi: load outside [0,1]");
  // Open interval so the logistic inverse stays finite.
  std::uniform_real_distribution<double> uniform(std::nextafter(0.0, 1.0), 1.0);
  double u = uniform(rng);
  if (u >= 1.0) u = std::nextafter(1.0, 0.0);
  const double logistic = std::log(u / (1.0 - u));
  return model.pivot + model.noise_scale * (model.logit(load, cqi) + logistic);
}

/// 1 iff every KPI meets its target (inclusive). The empty conjunction is 1.
inline bool kpi_accept(std::span<const double> kpis, std::span<const double> targets) {
  if (kpis.size() != targets.size()) throw DomainError("kpi_accept: kpi/target length mismatch");
  for (std::size_t i = 0; i < kpis.size(); ++i)
    if (!(kpis[i] >= targets[i])) return false;
  return true;
}

// ---------------------------------------------------------------------------
// Diurnal generator

/// Two-regime day/night profile. Within each regime demand follows a half
/// sine bump of relative height `swing`; CQI is regime mean plus noise.
struct DiurnalProfile {
  int day_start_hour{8};
  int day_end_hour{20};
  double day_demand{0.22};
  double night_demand{0.08};
  double swing{0.3};
  double demand_noise{0.15};   ///< relative per-tick noise (lognormal sigma)
  double daily_level_std{0.05};
  double day_cqi{8.0};
  double night_cqi{10.0};
  double cqi_noise{1.0};

  void validate() const {
    if (!(0 <= day_start_hour && day_start_hour < day_end_hour && day_end_hour <= 24))
      throw ConfigError("traffic profile: need 0 <= day_start < day_end <= 24");
    if (!(day_demand >= 0.0 && night_demand >= 0.0)) throw ConfigError("traffic profile: negative demand");
    if (!(demand_noise >= 0.0 && daily_level_std >= 0.0 && cqi_noise >= 0.0 && swing >= 0.0))
      throw ConfigError("traffic profile: negative noise parameter");
  }
};

template <class Rng>
TrafficTrace generate_trace(const DiurnalProfile& profile, std::size_t days, double tick_seconds, Rng& rng) {
  profile.validate();
  TrafficTrace trace;
  trace.tick_seconds = tick_seconds;
  const auto ticks_per_day = static_cast<std::size_t>(std::llround(86400.0 / tick_seconds));
  trace.demand.reserve(days * ticks_per_day);
  trace.cqi.reserve(days * ticks_per_day);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double day_len = profile.day_end_hour - profile.day_start_hour;
  const double night_len = 24.0 - day_len;
  for (std::size_t d = 0; d < days; ++d) {
    const double level = std::max(0.0, 1.0 + profile.daily_level_std * gauss(rng));
    for (std::size_t i = 0; i < ticks_per_day; ++i) {
      const double hour = static_cast<double>(i) * tick_seconds / 3600.0;
      const bool daytime = hour >= profile.day_start_hour && hour < profile.day_end_hour;
      double phase;
      if (daytime) {
        phase = (hour - profile.day_start_hour) / day_len;
      } else {
        const double since = hour >= profile.day_end_hour ? hour - profile.day_end_hour
                                                          : hour + 24.0 - profile.day_end_hour;
        phase = night_len > 0.0 ? since / night_len : 0.0;
      }
      const double mean = (daytime ? profile.day_demand : profile.night_demand) *
                          (1.0 + profile.swing * std::sin(std::numbers::pi * phase));
      const double noise = std::exp(profile.demand_noise * gauss(rng) -
                                    0.5 * profile.demand_noise * profile.demand_noise);
      trace.demand.push_back(std::min(1.0, level * mean * noise));
      const double cqi = (daytime ? profile.day_cqi : profile.night_cqi) + profile.cqi_noise * gauss(rng);
      trace.cqi.push_back(std::clamp(cqi, 0.0, 15.0));
    }
  }
  return trace;
}

// ---------------------------------------------------------------------------
// CSV: header `tick,demand,cqi`, one row per tick, ticks numbered from 0.

inline void write_trace_csv(std::ostream& out, const TrafficTrace& trace) {
  out << "tick,demand,cqi\n";
  out.precision(17);
  for (std::size_t t = 0; t < trace.size(); ++t) out << t << ',' << trace.demand[t] << ',' << trace.cqi[t] << '\n';
}

inline TrafficTrace read_trace_csv(std::istream& in, double tick_seconds) {
  TrafficTrace trace;
  trace.tick_seconds = tick_seconds;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("trace csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "tick,demand,cqi") throw ConfigError("trace csv: expected header 'tick,demand,cqi'");
  std::size_t expected = 0;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::istringstream row(line);
    std::string f_tick, f_demand, f_cqi;
    if (!std::getline(row, f_tick, ',') || !std::getline(row, f_demand, ',') || !std::getline(row, f_cqi))
      throw ConfigError("trace csv: malformed row at line " + std::to_string(lineno));
    try {
      if (std::stoull(f_tick) != expected)
        throw ConfigError("trace csv: ticks must be consecutive from 0 (line " + std::to_string(lineno) + ")");
      trace.demand.push_back(std::stod(f_demand));
      trace.cqi.push_back(std::stod(f_cqi));
    } catch (const std::logic_error&) {
      throw ConfigError("trace csv: unparsable number at line " + std::to_string(lineno));
    }
    ++expected;
  }
  trace.validate();
  return trace;
}

inline TrafficTrace load_trace_csv(const std::string& path, double tick_seconds) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open trace file: " + path);
  return read_trace_csv(in, tick_seconds);
}

}  // namespace cellsleep
