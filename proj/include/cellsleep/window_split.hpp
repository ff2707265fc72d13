#pragma once

// Day windowing by CQI stability.
//
// The day is cut at whole-hour boundaries h_0 < ... < h_{N-1}; window i spans
// [h_i, h_{i+1}) and the last one wraps through midnight to h_0. The chosen
// split minimises the mean over windows of the (population) standard
// deviation of the CQI samples falling in each window. Every window must last
// at least `min_len` hours. All N <= n_max and all boundary placements are
// enumerated; ties go to smaller N, then to the lexicographically earliest
// boundaries.

#include "cellsleep/errors.hpp"

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace cellsleep {

struct DayWindows {
  std::vector<int> boundaries{0};  ///< hours of day, strictly increasing

  std::size_t count() const { return boundaries.size(); }

  /// Length in hours of window i (the last one wraps).
  int length(std::size_t i) const {
    const int start = boundaries[i];
    const int end = i + 1 < boundaries.size() ? boundaries[i + 1] : boundaries.front() + 24;
    return end - start;
  }

  std::size_t window_of_hour(int hour) const {
    const int h = ((hour % 24) + 24) % 24;
    for (std::size_t i = count(); i-- > 0;)
      if (h >= boundaries[i]) return i;
    return count() - 1;  // before h_0: still inside the wrap window
  }

  void validate() const {
    if (boundaries.empty()) throw ConfigError("windows: need at least one boundary");
    for (std::size_t i = 0; i < boundaries.size(); ++i) {
      if (boundaries[i] < 0 || boundaries[i] > 23) throw ConfigError("windows: boundary outside [0,23]");
      if (i > 0 && boundaries[i] <= boundaries[i - 1]) throw ConfigError("windows: boundaries must increase");
    }
  }

  friend bool operator==(const DayWindows&, const DayWindows&) = default;
};

struct SplitResult {
  DayWindows windows;
  double objective{0.0};
};

namespace detail {

// Sufficient statistics per hour bucket so each window std is O(window hours).
struct HourStats {
  double n{0.0};
  double mean{0.0};
  double m2{0.0};  ///< sum of squared deviations from the bucket mean
};

// Pooled population std from per-bucket moments (parallel-variance merge).
inline double window_std(std::span<const HourStats> hours, int start, int len) {
  double n = 0.0, weighted = 0.0;
  for (int k = 0; k < len; ++k) {
    const auto& h = hours[static_cast<std::size_t>((start + k) % 24)];
    n += h.n;
    weighted += h.n * h.mean;
  }
  const double mean = weighted / n;
  double m2 = 0.0;
  for (int k = 0; k < len; ++k) {
    const auto& h = hours[static_cast<std::size_t>((start + k) % 24)];
    m2 += h.m2 + h.n * (h.mean - mean) * (h.mean - mean);
  }
  return std::sqrt(m2 / n);
}

}  // namespace detail

/// Mean of per-window CQI population standard deviations.
inline double window_objective(std::span<const std::vector<double>> cqi_by_hour, const DayWindows& windows) {
  double total = 0.0;
  for (std::size_t i = 0; i < windows.count(); ++i) {
    const int start = windows.boundaries[i];
    const int len = windows.length(i);
    double n = 0.0, mean = 0.0;
    for (int k = 0; k < len; ++k)
      for (double v : cqi_by_hour[static_cast<std::size_t>((start + k) % 24)]) {
        n += 1.0;
        mean += v;
      }
    mean /= n;
    double var = 0.0;
    for (int k = 0; k < len; ++k)
      for (double v : cqi_by_hour[static_cast<std::size_t>((start + k) % 24)]) var += (v - mean) * (v - mean);
    total += std::sqrt(var / n);
  }
  return total / static_cast<double>(windows.count());
}

inline SplitResult split_day(std::span<const std::vector<double>> cqi_by_hour, int n_max, int min_len) {
  if (cqi_by_hour.size() != 24) throw DomainError("split_day: expected 24 hourly buckets");
  for (const auto& bucket : cqi_by_hour)
    if (bucket.empty()) throw DomainError("split_day: every hour needs at least one CQI sample");
  if (n_max < 1) throw DomainError("split_day: n_max must be >= 1");
  if (min_len < 1) throw DomainError("split_day: min_len must be >= 1");

  std::vector<detail::HourStats> stats(24);
  for (std::size_t h = 0; h < 24; ++h) {
    auto& st = stats[h];
    st.n = static_cast<double>(cqi_by_hour[h].size());
    for (double v : cqi_by_hour[h]) st.mean += v;
    st.mean /= st.n;
    for (double v : cqi_by_hour[h]) st.m2 += (v - st.mean) * (v - st.mean);
  }

  DayWindows best;
  double best_obj = std::numeric_limits<double>::infinity();
  bool found = false;
  std::vector<int> cut;

  // Depth-first over increasing boundaries; the wrap window is checked when
  // the last boundary is placed.
  auto recurse = [&](auto&& self, int n_target) -> void {
    const auto placed = static_cast<int>(cut.size());
    if (placed == n_target) {
      const int wrap = cut.front() + 24 - cut.back();
      if (wrap < min_len) return;
      double obj = 0.0;
      for (int i = 0; i < n_target; ++i) {
        const int start = cut[static_cast<std::size_t>(i)];
        const int end = i + 1 < n_target ? cut[static_cast<std::size_t>(i + 1)] : cut.front() + 24;
        obj += detail::window_std(stats, start, end - start);
      }
      obj /= n_target;
      if (!found || obj < best_obj - 1e-12) {
        best_obj = obj;
        best.boundaries = cut;
        found = true;
      }
      return;
    }
    const int from = placed == 0 ? 0 : cut.back() + min_len;
    for (int h = from; h <= 23; ++h) {
      cut.push_back(h);
      self(self, n_target);
      cut.pop_back();
    }
  };

  for (int n = 1; n <= n_max && n * min_len <= 24; ++n) recurse(recurse, n);
  if (!found) throw ConstraintError("split_day: no window placement satisfies min_len");
  return {best, best_obj};
}

/// Buckets a per-tick CQI series by hour of day; tick 0 is midnight.
inline std::vector<std::vector<double>> cqi_by_hour(std::span<const double> cqi, double tick_seconds) {
  std::vector<std::vector<double>> buckets(24);
  for (std::size_t t = 0; t < cqi.size(); ++t) {
    const auto hour = static_cast<std::size_t>(std::fmod(static_cast<double>(t) * tick_seconds, 86400.0) / 3600.0);
    buckets[std::min<std::size_t>(hour, 23)].push_back(cqi[t]);
  }
  return buckets;
}

}  // namespace cellsleep
