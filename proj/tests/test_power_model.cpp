#include "cellsleep/power_model.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>
#include <vector>

using namespace cellsleep;

namespace {

PaMap one_pa_per_carrier(std::size_t n) {
  PaMap m;
  for (std::size_t c = 0; c < n; ++c) m.pa_of_carrier.push_back(c);
  m.curve_of_pa.assign(n, PowerCurve{});
  return m;
}

// Straightforward per-PA grouping, kept deliberately different from the
// library loop.
double brute_sector_power(const std::vector<CarrierIndex>& active, const std::vector<double>& loads,
                          const PaMap& map) {
  std::map<PaIndex, std::vector<double>> by_pa;
  for (auto c : active) by_pa[map.pa_of_carrier[c]].push_back(loads[c]);
  double total = 0.0;
  for (PaIndex pa = 0; pa < map.curve_of_pa.size(); ++pa) {
    const auto& curve = map.curve_of_pa[pa];
    auto it = by_pa.find(pa);
    if (it == by_pa.end()) {
      total += curve.sleep;
      continue;
    }
    double mean = 0.0;
    for (double l : it->second) mean += l;
    mean /= static_cast<double>(it->second.size());
    total += curve.slope * mean + curve.idle;
  }
  return total;
}

}  // namespace

TEST(PaPower, AffineWhenAwake) { EXPECT_DOUBLE_EQ(pa_power(0.5, true, {2, 10, 3}), 11.0); }

TEST(PaPower, SleepIgnoresLoad) {
  EXPECT_DOUBLE_EQ(pa_power(0.0, false, {2, 10, 3}), 3.0);
  EXPECT_DOUBLE_EQ(pa_power(0.9, false, {2, 10, 3}), 3.0);
}

TEST(PaPower, AwakeAtZeroLoadPaysIdle) { EXPECT_DOUBLE_EQ(pa_power(0.0, true, {2, 10, 3}), 10.0); }

TEST(PaPower, RejectsLoadOutsideUnitInterval) {
  EXPECT_THROW(pa_power(-0.01, true, {}), DomainError);
  EXPECT_THROW(pa_power(1.01, true, {}), DomainError);
  EXPECT_THROW(pa_power(std::nan(""), true, {}), DomainError);
}

TEST(PaPower, DiscontinuityGainAtLeastIdleMinusSleep) {
  const PowerCurve curve{2, 10, 3};
  for (double l = 0.01; l <= 1.0; l += 0.01)
    EXPECT_GE(pa_power(l, true, curve) - pa_power(l, false, curve), curve.idle - curve.sleep);
}

TEST(PowerCurve, Validation) {
  EXPECT_NO_THROW(PowerCurve{}.validate());
  EXPECT_THROW((PowerCurve{2, 3, 3}.validate()), ConfigError);
  EXPECT_THROW((PowerCurve{-1, 10, 3}.validate()), ConfigError);
}

TEST(SectorPower, OnlyCoverageCarrierAwake) {
  const auto map = one_pa_per_carrier(4);
  const std::vector<CarrierIndex> active{0};
  const std::vector<double> loads{0.5, 0, 0, 0};
  EXPECT_DOUBLE_EQ(sector_power(active, loads, map), 11.0 + 3 * 3.0);
}

TEST(SectorPower, SharedPaStaysAwakeWithOneCarrier) {
  PaMap map;
  map.pa_of_carrier = {0, 0};
  map.curve_of_pa = {PowerCurve{}};
  const std::vector<CarrierIndex> active{0};
  const std::vector<double> loads{0.0, 0.0};
  EXPECT_DOUBLE_EQ(sector_power(active, loads, map), 10.0);
}

TEST(SectorPower, SharedPaUsesMeanLoadOfActiveCarriers) {
  PaMap map;
  map.pa_of_carrier = {0, 0, 0};
  map.curve_of_pa = {PowerCurve{}};
  const std::vector<CarrierIndex> active{0, 2};
  const std::vector<double> loads{0.2, 0.9, 0.6};
  EXPECT_DOUBLE_EQ(sector_power(active, loads, map), 2 * 0.4 + 10);
}

TEST(SectorPower, TwoPasHandSum) {
  const auto map = one_pa_per_carrier(2);
  const std::vector<CarrierIndex> active{0, 1};
  const std::vector<double> loads{0.4, 0.6};
  EXPECT_DOUBLE_EQ(sector_power(active, loads, map), 22.0);
}

TEST(SectorPower, UnknownCarrierIsConfigError) {
  const auto map = one_pa_per_carrier(2);
  const std::vector<CarrierIndex> active{0, 2};
  const std::vector<double> loads{0.1, 0.1, 0.1};
  EXPECT_THROW(sector_power(active, loads, map), ConfigError);
}

TEST(SectorPower, MatchesBruteForceOnAllSmallConfigurations) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::size_t cases = 0;
  for (std::size_t pas = 1; pas <= 4; ++pas) {
    for (std::size_t carriers = 1; carriers <= 4; ++carriers) {
      // every total map carrier -> PA
      std::size_t maps = 1;
      for (std::size_t c = 0; c < carriers; ++c) maps *= pas;
      for (std::size_t code = 0; code < maps; ++code) {
        PaMap map;
        std::size_t rest = code;
        for (std::size_t c = 0; c < carriers; ++c) {
          map.pa_of_carrier.push_back(rest % pas);
          rest /= pas;
        }
        for (std::size_t p = 0; p < pas; ++p) map.curve_of_pa.push_back({u(rng) * 5, 5 + u(rng) * 10, u(rng) * 4});
        // every activity subset, with random loads
        for (std::size_t subset = 0; subset < (1u << carriers); ++subset) {
          std::vector<CarrierIndex> active;
          for (std::size_t c = 0; c < carriers; ++c)
            if (subset & (1u << c)) active.push_back(c);
          std::vector<double> loads(carriers);
          for (auto& l : loads) l = u(rng);
          EXPECT_NEAR(sector_power(active, loads, map), brute_sector_power(active, loads, map), 1e-12);
          ++cases;
        }
      }
    }
  }
  EXPECT_GT(cases, 1000u);
}

TEST(SectorPower, NonDecreasingInEveryCarrierLoad) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PaMap map;
  map.pa_of_carrier = {0, 0, 1, 2};
  map.curve_of_pa = {PowerCurve{}, PowerCurve{1.5, 8, 2}, PowerCurve{3, 12, 4}};
  for (int trial = 0; trial < 500; ++trial) {
    std::vector<CarrierIndex> active;
    for (CarrierIndex c = 0; c < 4; ++c)
      if (u(rng) < 0.6) active.push_back(c);
    std::vector<double> loads(4);
    for (auto& l : loads) l = u(rng);
    const double before = sector_power(active, loads, map);
    const auto c = static_cast<std::size_t>(u(rng) * 4) % 4;
    loads[c] = loads[c] + (1.0 - loads[c]) * u(rng);
    EXPECT_GE(sector_power(active, loads, map), before - 1e-12);
  }
}
