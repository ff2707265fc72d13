#pragma once

// Grid Bayesian learner for the acceptance curve.
//
// The probability that a KPI sample is acceptable when threshold pair rho^x is
// deployed is modelled as p(x) = clamp(a - b x, 0, 1) with theta = (a, b). The
// belief over theta is a probability mass on a rectangular (a, b) lattice.
// Each round the belief is optionally diffused by a Gaussian random-walk
// kernel (parameter drift between rounds), multiplied by the Bernoulli
// likelihood of the round's binary samples and renormalised. The next x is
// the largest grid point whose posterior-expected acceptance is closest to
// the confidence target.
//
// A stochastic-approximation step is provided as the comparison baseline.

#include "cellsleep/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace cellsleep {

struct CurveParams {
  double a{1.0};  ///< intercept
  double b{1.0};  ///< slope (b >= 0 keeps the curve non-increasing)

  bool monotone() const { return b >= 0.0; }
};

inline double curve_prob(double x, const CurveParams& params) {
  return std::min(std::max(params.a - params.b * x, 0.0), 1.0);
}

struct GridSpec {
  double a_min{0.0};
  double a_max{1.5};
  std::size_t a_nodes{61};
  double b_min{0.0};
  double b_max{3.0};
  std::size_t b_nodes{61};

  std::size_t size() const { return a_nodes * b_nodes; }
  double a_step() const { return a_nodes > 1 ? (a_max - a_min) / static_cast<double>(a_nodes - 1) : 0.0; }
  double b_step() const { return b_nodes > 1 ? (b_max - b_min) / static_cast<double>(b_nodes - 1) : 0.0; }
  double a_at(std::size_t i) const { return a_min + static_cast<double>(i) * a_step(); }
  double b_at(std::size_t j) const { return b_min + static_cast<double>(j) * b_step(); }

  void validate() const {
    if (a_nodes == 0 || b_nodes == 0) throw ConfigError("grid: node counts must be positive");
    if (!(a_min <= a_max) || !(b_min <= b_max)) throw ConfigError("grid: min must not exceed max");
    if (!std::isfinite(a_min) || !std::isfinite(a_max) || !std::isfinite(b_min) || !std::isfinite(b_max))
      throw ConfigError("grid: non-finite bounds");
  }

  friend bool operator==(const GridSpec&, const GridSpec&) = default;
};

/// Probability mass over the (a, b) lattice, row-major in a: index = i * b_nodes + j.
struct ParamBelief {
  GridSpec grid;
  std::vector<double> mass;

  std::size_t index(std::size_t i, std::size_t j) const { return i * grid.b_nodes + j; }
  CurveParams params_at(std::size_t idx) const {
    return {grid.a_at(idx / grid.b_nodes), grid.b_at(idx % grid.b_nodes)};
  }

  double total() const { return std::accumulate(mass.begin(), mass.end(), 0.0); }

  /// E_theta[p_theta(x)].
  double expected_prob(double x) const {
    double e = 0.0;
    for (std::size_t idx = 0; idx < mass.size(); ++idx)
      if (mass[idx] > 0.0) e += mass[idx] * curve_prob(x, params_at(idx));
    return e;
  }

  CurveParams mean_params() const {
    CurveParams m{0.0, 0.0};
    for (std::size_t idx = 0; idx < mass.size(); ++idx) {
      const auto p = params_at(idx);
      m.a += mass[idx] * p.a;
      m.b += mass[idx] * p.b;
    }
    return m;
  }

  double entropy() const {
    double h = 0.0;
    for (double m : mass)
      if (m > 0.0) h -= m * std::log(m);
    return h;
  }
};

struct KpiBatch {
  double x_used{0.0};
  std::vector<std::uint8_t> samples;  ///< binary acceptances d_i
  std::size_t window{0};
  std::size_t round{0};

  std::size_t size() const { return samples.size(); }
  std::size_t successes() const {
    return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(), [](auto d) { return d != 0; }));
  }
  double mean() const { return samples.empty() ? 0.0 : static_cast<double>(successes()) / size(); }

  void validate() const {
    if (!(x_used >= 0.0 && x_used <= 1.0)) throw DomainError("kpi batch: x outside [0,1]");
    for (auto d : samples)
      if (d > 1) throw DomainError("kpi batch: samples must be binary");
  }
};

/// Independent zero-mean Gaussian increments of (a, b) per round.
struct DriftKernel {
  double std_a{0.0};
  double std_b{0.0};

  bool is_zero() const { return std_a == 0.0 && std_b == 0.0; }
  void validate() const {
    if (!(std_a >= 0.0 && std_b >= 0.0)) throw ConfigError("drift kernel: standard deviations must be >= 0");
  }
};

// ---------------------------------------------------------------------------
// Likelihood

/// log of p^s (1-p)^(n-s); -inf for an impossible observation, 0^0 = 1.
inline double log_bernoulli_likelihood(double p, std::size_t successes, std::size_t trials) {
  const std::size_t failures = trials - successes;
  double ll = 0.0;
  if (successes > 0) {
    if (p <= 0.0) return -std::numeric_limits<double>::infinity();
    ll += static_cast<double>(successes) * std::log(p);
  }
  if (failures > 0) {
    if (p >= 1.0) return -std::numeric_limits<double>::infinity();
    ll += static_cast<double>(failures) * std::log1p(-p);
  }
  return ll;
}

inline double batch_likelihood(const KpiBatch& batch, const CurveParams& params) {
  return std::exp(log_bernoulli_likelihood(curve_prob(batch.x_used, params), batch.successes(), batch.size()));
}

// ---------------------------------------------------------------------------
// Belief construction and updates

/// Uniform mass over the nodes with b >= 0.
inline ParamBelief uniform_belief(const GridSpec& grid) {
  grid.validate();
  ParamBelief belief{grid, std::vector<double>(grid.size(), 0.0)};
  std::size_t feasible = 0;
  for (std::size_t idx = 0; idx < belief.mass.size(); ++idx)
    if (belief.params_at(idx).monotone()) ++feasible;
  if (feasible == 0) throw ConfigError("grid: no node satisfies the monotonicity condition b >= 0");
  for (std::size_t idx = 0; idx < belief.mass.size(); ++idx)
    if (belief.params_at(idx).monotone()) belief.mass[idx] = 1.0 / static_cast<double>(feasible);
  return belief;
}

namespace detail {

// Symmetric random-walk matrix on `n` lattice points: off-diagonal weight
// w(|i-j|) from a discretised Gaussian truncated at 3 sigma, diagonal takes the
// remainder. Rows and columns both sum to one, so no mass leaves the lattice.
inline std::vector<double> gaussian_walk_weights(double sigma, double spacing) {
  if (!(sigma > 0.0) || !(spacing > 0.0)) return {1.0};
  const auto reach = static_cast<std::size_t>(std::floor(3.0 * sigma / spacing));
  std::vector<double> w(reach + 1);
  double norm = 0.0;
  for (std::size_t k = 0; k <= reach; ++k) {
    const double z = static_cast<double>(k) * spacing / sigma;
    w[k] = std::exp(-0.5 * z * z);
    norm += k == 0 ? w[k] : 2.0 * w[k];
  }
  for (auto& v : w) v /= norm;
  return w;
}

// Applies the walk along one axis of the (row-major) mass array. `count`
// lattice points starting at `first`, separated by `stride` in memory;
// repeated for `lines` lines separated by `line_stride`.
inline void walk_axis(std::vector<double>& mass, const std::vector<double>& w, std::size_t first,
                      std::size_t count, std::size_t stride, std::size_t lines, std::size_t line_stride) {
  if (w.size() <= 1 || count <= 1) return;
  const std::size_t reach = w.size() - 1;
  std::vector<double> in(count), out(count);
  for (std::size_t line = 0; line < lines; ++line) {
    const std::size_t base = line * line_stride + first * stride;
    for (std::size_t i = 0; i < count; ++i) in[i] = mass[base + i * stride];
    for (std::size_t i = 0; i < count; ++i) {
      double acc = 0.0;
      double kept = 1.0;
      const std::size_t lo = i > reach ? i - reach : 0;
      const std::size_t hi = std::min(count - 1, i + reach);
      for (std::size_t j = lo; j <= hi; ++j) {
        if (j == i) continue;
        const double wij = w[i > j ? i - j : j - i];
        acc += wij * in[j];
        kept -= wij;
      }
      out[i] = acc + kept * in[i];
    }
    for (std::size_t i = 0; i < count; ++i) mass[base + i * stride] = out[i];
  }
}

inline void normalize(std::vector<double>& mass) {
  const double total = std::accumulate(mass.begin(), mass.end(), 0.0);
  for (auto& m : mass) m /= total;
}

}  // namespace detail

/// Diffuses the belief by the drift kernel. Nodes with b < 0 stay at zero.
inline ParamBelief apply_drift(const ParamBelief& belief, const DriftKernel& kernel) {
  kernel.validate();
  ParamBelief out = belief;
  if (kernel.is_zero()) return out;
  const auto& g = belief.grid;
  // Feasible b indices form a suffix of the b axis.
  std::size_t first_b = 0;
  while (first_b < g.b_nodes && g.b_at(first_b) < 0.0) ++first_b;
  const std::size_t feasible_b = g.b_nodes - first_b;
  detail::walk_axis(out.mass, detail::gaussian_walk_weights(kernel.std_a, g.a_step()), 0, g.a_nodes, g.b_nodes,
                    g.b_nodes, 1);
  detail::walk_axis(out.mass, detail::gaussian_walk_weights(kernel.std_b, g.b_step()), first_b, feasible_b, 1,
                    g.a_nodes, g.b_nodes);
  detail::normalize(out.mass);
  return out;
}

/// Drift (when the kernel is non-zero), then Bayes rule with the batch
/// likelihood. Throws DegenerateEvidence when no node is compatible with the
/// data; the input belief is not modified.
inline ParamBelief posterior_update(const ParamBelief& belief, const KpiBatch& batch, const DriftKernel& kernel) {
  batch.validate();
  if (belief.mass.size() != belief.grid.size()) throw DomainError("posterior_update: mass/grid size mismatch");
  if (std::abs(belief.total() - 1.0) > 1e-6) throw DomainError("posterior_update: belief is not normalised");
  ParamBelief prior = apply_drift(belief, kernel);
  const std::size_t n = batch.size();
  if (n == 0) return prior;
  const std::size_t s = batch.successes();

  std::vector<double> log_post(prior.mass.size(), -std::numeric_limits<double>::infinity());
  double peak = -std::numeric_limits<double>::infinity();
  for (std::size_t idx = 0; idx < prior.mass.size(); ++idx) {
    if (!(prior.mass[idx] > 0.0)) continue;
    const double ll = log_bernoulli_likelihood(curve_prob(batch.x_used, prior.params_at(idx)), s, n);
    if (ll == -std::numeric_limits<double>::infinity()) continue;
    log_post[idx] = std::log(prior.mass[idx]) + ll;
    peak = std::max(peak, log_post[idx]);
  }
  if (peak == -std::numeric_limits<double>::infinity())
    throw DegenerateEvidence("posterior_update: every grid node has zero likelihood for the batch");
  for (std::size_t idx = 0; idx < prior.mass.size(); ++idx)
    prior.mass[idx] = log_post[idx] == -std::numeric_limits<double>::infinity() ? 0.0 : std::exp(log_post[idx] - peak);
  detail::normalize(prior.mass);
  return prior;
}

/// Largest x on {0, step, ..., 1} minimising |E[p_theta(x)] - xi|.
inline double select_x(const ParamBelief& belief, double xi, double x_step = 0.01) {
  if (!(xi >= 0.0 && xi <= 1.0)) throw DomainError("select_x: xi outside [0,1]");
  if (!(x_step > 0.0 && x_step <= 1.0)) throw DomainError("select_x: step must be in (0,1]");
  const auto steps = static_cast<std::size_t>(std::llround(1.0 / x_step));
  // Collect the support once; expected_prob would rescan zero-mass nodes.
  std::vector<double> w, a, b;
  for (std::size_t idx = 0; idx < belief.mass.size(); ++idx) {
    if (belief.mass[idx] > 0.0) {
      const auto p = belief.params_at(idx);
      w.push_back(belief.mass[idx]);
      a.push_back(p.a);
      b.push_back(p.b);
    }
  }
  double best_x = 0.0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k <= steps; ++k) {
    const double x = std::min(1.0, static_cast<double>(k) / static_cast<double>(steps));
    double e = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) e += w[i] * std::min(std::max(a[i] - b[i] * x, 0.0), 1.0);
    const double gap = std::abs(e - xi);
    // Ties go to the larger x (lower consumption).
    if (gap <= best_gap + 1e-12) {
      best_gap = std::min(gap, best_gap);
      best_x = x;
    }
  }
  return best_x;
}

/// Uniform monotone prior refined by replaying historical batches in order.
inline ParamBelief init_prior(const GridSpec& grid, std::span<const KpiBatch> history) {
  ParamBelief belief = uniform_belief(grid);
  for (const auto& batch : history) belief = posterior_update(belief, batch, DriftKernel{});
  return belief;
}

// ---------------------------------------------------------------------------
// Stochastic approximation baseline

inline double sa_step(double x, double batch_mean, double xi, double eps) {
  if (!(eps > 0.0)) throw DomainError("sa_step: step size must be positive");
  return std::clamp(x + eps * (batch_mean - xi), 0.0, 1.0);
}

/// eps_k = eps0 / k for rounds k = 1, 2, ...
inline double sa_step_size(double eps0, std::size_t round_one_based) {
  return eps0 / static_cast<double>(std::max<std::size_t>(round_one_based, 1));
}

// ---------------------------------------------------------------------------
// Checkpoint format (text):
//
//   cellsleep-belief 1
//   a <a_min> <a_max> <a_nodes>
//   b <b_min> <b_max> <b_nodes>
//   mass <count>
//   <one mass value per line>

inline void write_belief(std::ostream& out, const ParamBelief& belief) {
  const auto& g = belief.grid;
  out << "cellsleep-belief 1\n" << std::setprecision(17);
  out << "a " << g.a_min << ' ' << g.a_max << ' ' << g.a_nodes << '\n';
  out << "b " << g.b_min << ' ' << g.b_max << ' ' << g.b_nodes << '\n';
  out << "mass " << belief.mass.size() << '\n';
  for (double m : belief.mass) out << m << '\n';
}

inline ParamBelief read_belief(std::istream& in) {
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "cellsleep-belief") throw ConfigError("belief checkpoint: bad magic");
  if (version != 1) throw ConfigError("belief checkpoint: unsupported version " + std::to_string(version));
  ParamBelief belief;
  auto& g = belief.grid;
  std::string axis;
  if (!(in >> axis >> g.a_min >> g.a_max >> g.a_nodes) || axis != "a")
    throw ConfigError("belief checkpoint: bad a-axis line");
  if (!(in >> axis >> g.b_min >> g.b_max >> g.b_nodes) || axis != "b")
    throw ConfigError("belief checkpoint: bad b-axis line");
  g.validate();
  std::size_t count = 0;
  if (!(in >> tag >> count) || tag != "mass" || count != g.size())
    throw ConfigError("belief checkpoint: mass count does not match grid");
  belief.mass.resize(count);
  for (auto& m : belief.mass) {
    if (!(in >> m) || !(m >= 0.0)) throw ConfigError("belief checkpoint: bad mass value");
  }
  if (std::abs(belief.total() - 1.0) > 1e-9) throw ConfigError("belief checkpoint: mass does not sum to 1");
  return belief;
}

}  // namespace cellsleep
