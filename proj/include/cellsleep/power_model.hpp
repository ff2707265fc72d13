#pragma once

// Power-amplifier consumption model.
//
// An awake PA draws slope * load + idle; a PA whose carriers are all shut
// down drops to the sleep floor. The curve is discontinuous at zero load:
// an awake PA at load 0 still pays `idle`, which is what makes carrier
// shutdown pay off even though the surviving carriers get busier.

#include "cellsleep/errors.hpp"

#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace cellsleep {

using CarrierIndex = std::size_t;
using PaIndex = std::size_t;

struct PowerCurve {
  double slope{2.0};   ///< watts per unit load
  double idle{10.0};   ///< watts at load -> 0+
  double sleep{3.0};   ///< watts with the PA asleep

  void validate() const {
    if (!std::isfinite(slope) || !std::isfinite(idle) || !std::isfinite(sleep))
      throw ConfigError("power curve: non-finite parameter");
    if (slope < 0.0 || idle < 0.0 || sleep < 0.0)
      throw ConfigError("power curve: parameters must be >= 0");
    if (!(sleep < idle)) throw ConfigError("power curve: sleep power must be below idle power");
  }
};

/// Carrier -> PA assignment. Several carriers may share one PA.
struct PaMap {
  std::vector<PaIndex> pa_of_carrier;
  std::vector<PowerCurve> curve_of_pa;

  std::size_t carrier_count() const { return pa_of_carrier.size(); }
  std::size_t pa_count() const { return curve_of_pa.size(); }

  void validate() const {
    for (std::size_t c = 0; c < pa_of_carrier.size(); ++c) {
      if (pa_of_carrier[c] >= curve_of_pa.size())
        throw ConfigError("pa map: carrier " + std::to_string(c) + " maps to unknown PA");
    }
    for (const auto& curve : curve_of_pa) curve.validate();
  }
};

inline double pa_power(double total_load_on_pa, bool any_carrier_active, const PowerCurve& curve) {
  if (!(total_load_on_pa >= 0.0 && total_load_on_pa <= 1.0))
    throw DomainError("pa_power: load outside [0,1]");
  if (!any_carrier_active) return curve.sleep;
  return curve.slope * total_load_on_pa + curve.idle;
}

/// Sum of PA power over the sector. `loads` is indexed by carrier; only
/// entries of active carriers are read. A PA's load is the mean load of its
/// active carriers; a PA is asleep iff none of its carriers is active.
inline double sector_power(std::span<const CarrierIndex> active, std::span<const double> loads,
                           const PaMap& map) {
  for (CarrierIndex c : active) {
    if (c >= map.pa_of_carrier.size())
      throw ConfigError("sector_power: active carrier " + std::to_string(c) + " absent from PA map");
    if (c >= loads.size()) throw DomainError("sector_power: no load for active carrier");
  }
  double watts = 0.0;
  for (PaIndex pa = 0; pa < map.curve_of_pa.size(); ++pa) {
    double sum = 0.0;
    std::size_t n = 0;
    for (CarrierIndex c : active) {
      if (map.pa_of_carrier[c] == pa) {
        sum += loads[c];
        ++n;
      }
    }
    watts += pa_power(n == 0 ? 0.0 : sum / static_cast<double>(n), n > 0, map.curve_of_pa[pa]);
  }
  return watts;
}

}  // namespace cellsleep
