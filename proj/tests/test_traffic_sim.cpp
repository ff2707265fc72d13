#include "cellsleep/traffic_sim.hpp"

#include <gtest/gtest.h>

#include <random>
#include <sstream>
#include <vector>

using namespace cellsleep;

namespace {

std::vector<CarrierSpec> equal_carriers(std::size_t n) {
  std::vector<CarrierSpec> c;
  for (std::size_t i = 0; i < n; ++i) c.push_back({"c" + std::to_string(i), 800.0 + 100.0 * i, 1.0});
  return c;
}

double acceptance_rate(double load, double cqi, const KpiModel& m, std::uint64_t seed, int draws = 10000) {
  std::mt19937_64 rng(seed);
  int ok = 0;
  for (int i = 0; i < draws; ++i) ok += sample_kpi(load, cqi, m, rng) >= m.pivot ? 1 : 0;
  return static_cast<double>(ok) / draws;
}

}  // namespace

TEST(Redistribute, OneOfFourCarriersClipsWithOverflow) {
  const auto all = equal_carriers(4);
  const auto r = redistribute(0.5, std::span(all).first(1), 4.0);
  ASSERT_EQ(r.loads.size(), 1u);
  EXPECT_DOUBLE_EQ(r.loads[0], 1.0);
  EXPECT_DOUBLE_EQ(r.overflow, 0.25);  // 2 units offered, 1 carried, in sector units
}

TEST(Redistribute, ProportionalSplitAcrossAllCarriers) {
  const auto all = equal_carriers(4);
  const auto r = redistribute(0.25, all, 4.0);
  for (double l : r.loads) EXPECT_DOUBLE_EQ(l, 0.25);
  EXPECT_DOUBLE_EQ(r.overflow, 0.0);
}

TEST(Redistribute, ZeroDemandZeroLoads) {
  const auto all = equal_carriers(4);
  for (std::size_t n = 1; n <= 4; ++n)
    for (double l : redistribute(0.0, std::span(all).first(n), 4.0).loads) EXPECT_EQ(l, 0.0);
}

TEST(Redistribute, Errors) {
  const std::vector<CarrierSpec> none;
  EXPECT_THROW(redistribute(0.1, none, 1.0), DomainError);
  const auto all = equal_carriers(2);
  EXPECT_THROW(redistribute(-0.1, all, 2.0), DomainError);
}

TEST(Redistribute, ConservationBelowCongestion) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<CarrierSpec> c;
    const std::size_t n = 1 + rng() % 5;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      c.push_back({"c", 100.0 * i, 0.5 + 2 * u(rng)});
      total += c.back().capacity_weight;
    }
    const std::size_t k = 1 + rng() % n;
    const double demand = u(rng) * 0.8;
    const auto r = redistribute(demand, std::span(c).first(k), total);
    double carried = 0.0;
    for (std::size_t i = 0; i < k; ++i) carried += r.loads[i] * c[i].capacity_weight / total;
    // carried + overflow always equals demand; below congestion overflow is 0
    EXPECT_NEAR(carried + r.overflow, demand, 1e-12);
    bool clipped = false;
    for (double l : r.loads) clipped |= l >= 1.0;
    if (!clipped) {
      EXPECT_EQ(r.overflow, 0.0);
    }
  }
}

TEST(Redistribute, RemovingACarrierNeverLowersMeanLoad) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<CarrierSpec> c{{"a", 800, 1.0}, {"b", 1800, 2.0}, {"c", 2100, 1.5}, {"d", 2600, 2.0}};
  for (int trial = 0; trial < 1000; ++trial) {
    const double demand = u(rng);
    for (std::size_t k = 2; k <= 4; ++k) {
      const auto more = redistribute(demand, std::span(c).first(k), 6.5);
      const auto fewer = redistribute(demand, std::span(c).first(k - 1), 6.5);
      EXPECT_GE(mean_load(fewer.loads, std::span(c).first(k - 1)) + 1e-12,
                mean_load(more.loads, std::span(c).first(k)));
    }
  }
}

TEST(MeanLoad, Examples) {
  const auto eq = equal_carriers(2);
  EXPECT_DOUBLE_EQ(mean_load(std::vector{0.2, 0.4}, eq), 0.3);
  const std::vector<CarrierSpec> w{{"a", 800, 2.0}, {"b", 1800, 1.0}};
  EXPECT_DOUBLE_EQ(mean_load(std::vector{0.3, 0.9}, w), 0.5);
  EXPECT_DOUBLE_EQ(mean_load(std::vector{0.3, 0.9}, w, MeanLoadMode::unweighted), 0.6);
  EXPECT_DOUBLE_EQ(mean_load(std::vector{0.7}, std::span(eq).first(1)), 0.7);
}

TEST(SampleKpi, DeterministicUnderSeed) {
  const KpiModel m;
  std::mt19937_64 a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_kpi(0.4, 9.0, m, a), sample_kpi(0.4, 9.0, m, b));
}

TEST(SampleKpi, LoadLowersAcceptance) {
  const KpiModel m;
  EXPECT_GT(acceptance_rate(0.0, 9.0, m, 1), acceptance_rate(1.0, 9.0, m, 1));
}

TEST(SampleKpi, CqiRaisesAcceptance) {
  const KpiModel m;
  EXPECT_GT(acceptance_rate(0.5, 15.0, m, 2), acceptance_rate(0.5, 1.0, m, 2));
}

TEST(SampleKpi, RejectsLoadOutsideUnitInterval) {
  std::mt19937_64 rng(1);
  EXPECT_THROW(sample_kpi(1.2, 9.0, KpiModel{}, rng), DomainError);
}

TEST(SampleKpi, EmpiricalRateMatchesLogisticWithinThreeSigma) {
  const KpiModel m;
  for (double load : {0.0, 0.3, 0.6, 0.85, 1.0}) {
    const double p = acceptance_probability(load, 9.0, m);
    const double sigma = std::sqrt(p * (1 - p) / 10000.0);
    EXPECT_NEAR(acceptance_rate(load, 9.0, m, 17), p, 3 * sigma + 1e-9) << "load " << load;
  }
}

TEST(SampleKpi, AcceptanceNonIncreasingInLoad) {
  const KpiModel m;
  double prev = 1.0;
  for (int k = 0; k <= 10; ++k) {
    const double load = k / 10.0;
    const double p = acceptance_probability(load, 9.0, m);
    EXPECT_LE(p, prev);
    prev = p;
    // statistical version: 3 sigma band on the difference at 10^4 draws each
    if (k > 0) {
      const double hi = acceptance_rate(load - 0.1, 9.0, m, 100 + k);
      const double lo = acceptance_rate(load, 9.0, m, 200 + k);
      EXPECT_LE(lo, hi + 3 * std::sqrt(0.5 / 10000.0));
    }
  }
}

TEST(KpiModel, DefaultCalibrationAtMedianCqi) {
  const KpiModel m;
  EXPECT_NEAR(acceptance_probability(0.3, 9.0, m), 0.95, 0.005);
  EXPECT_NEAR(acceptance_probability(0.85, 9.0, m), 0.5, 0.005);
}

TEST(KpiAccept, Examples) {
  EXPECT_TRUE(kpi_accept(std::vector{6.1}, std::vector{5.0}));
  EXPECT_FALSE(kpi_accept(std::vector{6.1, 0.2}, std::vector{5.0, 0.5}));
  EXPECT_TRUE(kpi_accept(std::vector<double>{}, std::vector<double>{}));
  EXPECT_TRUE(kpi_accept(std::vector{5.0}, std::vector{5.0}));
  EXPECT_THROW(kpi_accept(std::vector{1.0}, std::vector<double>{}), DomainError);
}

TEST(KpiAccept, MonotoneInEachKpi) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.0, 10.0);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> kpis(3), targets(3);
    for (auto& v : kpis) v = u(rng);
    for (auto& v : targets) v = u(rng);
    const bool before = kpi_accept(kpis, targets);
    kpis[rng() % 3] += u(rng);
    if (before) {
      EXPECT_TRUE(kpi_accept(kpis, targets));
    }
  }
}

TEST(GenerateTrace, ShapeAndDeterminism) {
  DiurnalProfile p;
  std::mt19937_64 a(1), b(1);
  const auto t1 = generate_trace(p, 3, 60.0, a);
  const auto t2 = generate_trace(p, 3, 60.0, b);
  ASSERT_EQ(t1.size(), 3u * 1440u);
  EXPECT_EQ(t1.demand, t2.demand);
  EXPECT_EQ(t1.cqi, t2.cqi);
  EXPECT_NO_THROW(t1.validate());
}

TEST(GenerateTrace, DayBusierThanNight) {
  DiurnalProfile p;
  std::mt19937_64 rng(2);
  const auto t = generate_trace(p, 10, 60.0, rng);
  double day = 0, night = 0;
  std::size_t nd = 0, nn = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    const auto hour = (i % 1440) / 60;
    if (hour >= 8 && hour < 20) {
      day += t.demand[i];
      ++nd;
    } else {
      night += t.demand[i];
      ++nn;
    }
  }
  EXPECT_GT(day / nd, 2 * night / nn);
}

TEST(TraceCsv, RoundTrip) {
  DiurnalProfile p;
  std::mt19937_64 rng(3);
  const auto t = generate_trace(p, 1, 300.0, rng);
  std::stringstream ss;
  write_trace_csv(ss, t);
  const auto back = read_trace_csv(ss, 300.0);
  EXPECT_EQ(back.demand, t.demand);
  EXPECT_EQ(back.cqi, t.cqi);
}

TEST(TraceCsv, RejectsBadInput) {
  auto parse = [](const std::string& s) {
    std::istringstream in(s);
    return read_trace_csv(in, 60.0);
  };
  EXPECT_THROW(parse(""), ConfigError);
  EXPECT_THROW(parse("t,d,c\n0,0.1,5\n"), ConfigError);
  EXPECT_THROW(parse("tick,demand,cqi\n1,0.1,5\n"), ConfigError);
  EXPECT_THROW(parse("tick,demand,cqi\n0,-0.1,5\n"), ConfigError);
  EXPECT_THROW(parse("tick,demand,cqi\n0,0.1,16\n"), ConfigError);
  EXPECT_THROW(parse("tick,demand,cqi\n0,abc,5\n"), ConfigError);
  EXPECT_THROW(parse("tick,demand,cqi\n0,0.1\n"), ConfigError);
  EXPECT_NO_THROW(parse("tick,demand,cqi\r\n0,0.1,5\r\n1,0.2,6\r\n"));
}
