#pragma once

// Hysteresis carrier shutdown.
//
// Carriers are kept in a fixed activation order. The active set is always a
// prefix of that order: shutdown removes the last active carrier, reactivation
// switches the next one back on. The sector-mean load is compared against
// [rho_min, rho_max] with strict inequalities; at most one carrier changes per
// step and the first `coverage_floor` carriers are never shut down.

#include "cellsleep/errors.hpp"
#include "cellsleep/power_model.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace cellsleep {

struct ThresholdPair {
  double rho_min{0.0};
  double rho_max{0.0};

  bool is_all_active_baseline() const { return rho_min == 0.0 && rho_max == 0.0; }

  void validate() const {
    if (is_all_active_baseline()) return;
    if (!(rho_min >= 0.0 && rho_min < rho_max && rho_max <= 1.0))
      throw DomainError("thresholds: require 0 <= rho_min < rho_max <= 1");
  }

  friend bool operator==(const ThresholdPair&, const ThresholdPair&) = default;
};

/// Monotone straight segment of threshold pairs, parameterised by x in [0,1].
struct SearchRegion {
  ThresholdPair lo{0.0, 0.0};
  ThresholdPair hi{0.45, 0.9};

  void validate() const {
    if (!(lo.rho_min >= 0.0 && lo.rho_max >= 0.0 && lo.rho_min <= hi.rho_min && lo.rho_max <= hi.rho_max))
      throw ConfigError("search region: endpoints must be non-negative and component-wise ordered");
    if (!(hi.rho_min < hi.rho_max && hi.rho_max <= 1.0))
      throw ConfigError("search region: upper endpoint needs rho_min < rho_max <= 1");
  }
};

inline ThresholdPair thresholds_from_x(double x, const SearchRegion& region) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("thresholds_from_x: x outside [0,1]");
  return {region.lo.rho_min + x * (region.hi.rho_min - region.lo.rho_min),
          region.lo.rho_max + x * (region.hi.rho_max - region.lo.rho_max)};
}

struct PolicyState {
  std::vector<CarrierIndex> ordered_carriers;
  std::size_t active_count{1};
  std::size_t coverage_floor{1};

  std::size_t carrier_count() const { return ordered_carriers.size(); }

  std::span<const CarrierIndex> active_carriers() const {
    return std::span<const CarrierIndex>(ordered_carriers).first(active_count);
  }

  void validate() const {
    if (coverage_floor < 1) throw ConfigError("policy: coverage floor must be >= 1");
    if (!(coverage_floor <= active_count && active_count <= ordered_carriers.size()))
      throw ConfigError("policy: need coverage_floor <= active_count <= carrier count");
  }
};

/// Active-carrier count after one step of the hysteresis rule.
inline std::size_t next_active_count(std::size_t active_count, std::size_t carrier_count,
                                     std::size_t coverage_floor, double mean_load,
                                     const ThresholdPair& thresholds) {
  if (!(mean_load >= 0.0 && mean_load <= 1.0)) throw DomainError("policy_step: load outside [0,1]");
  if (mean_load < thresholds.rho_min && active_count > coverage_floor) return active_count - 1;
  if (mean_load > thresholds.rho_max && active_count < carrier_count) return active_count + 1;
  return active_count;
}

inline PolicyState policy_step(const PolicyState& state, double mean_load, const ThresholdPair& thresholds) {
  PolicyState next = state;
  next.active_count = next_active_count(state.active_count, state.carrier_count(), state.coverage_floor,
                                        mean_load, thresholds);
  return next;
}

}  // namespace cellsleep
