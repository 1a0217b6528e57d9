#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "fbmlab/gauss.hpp"
#include "fbmlab/kernel.hpp"

namespace fbmlab {

/// Knots k/2^m on [0,1]; all knots are exactly representable dyadic rationals.
struct DyadicGrid {
  explicit DyadicGrid(int level_) : level(level_) {
    if (level < 0 || level > 24) throw std::domain_error("DyadicGrid: level out of range");
    const int n = (1 << level) + 1;
    knots.resize(static_cast<size_t>(n));
    const double scale = std::ldexp(1.0, -level);
    for (int k = 0; k < n; ++k) knots[static_cast<size_t>(k)] = k * scale;
  }

  int size() const { return static_cast<int>(knots.size()); }
  int cells() const { return size() - 1; }

  int level;
  std::vector<double> knots;
};

/// A path observed at the knots of a dyadic grid, optionally rescaled to a
/// horizon t (knot k sits at t * k/2^m). Paths start at the origin.
struct PathSample {
  PathSample(DyadicGrid grid_, std::vector<double> values_, double horizon_ = 1.0)
      : grid(std::move(grid_)), values(std::move(values_)), horizon(horizon_) {
    if (static_cast<int>(values.size()) != grid.size())
      throw std::invalid_argument("PathSample: value count must be 2^m + 1");
    if (values.empty() || values.front() != 0.0)
      throw std::invalid_argument("PathSample: paths start at the origin");
    if (!(horizon > 0.0 && horizon <= 1.0))
      throw std::domain_error("PathSample: horizon must be in (0,1]");
  }

  int level() const { return grid.level; }

  DyadicGrid grid;
  std::vector<double> values;
  double horizon;
};

/// Brownian path on the grid by the midpoint (Levy) construction, scaled to
/// the horizon. Refinement-consistent: the same stream at level m+1 restricted
/// to level-m knots reproduces the level-m path bit for bit.
inline PathSample brownian_path(const DyadicGrid& grid, GaussianStream& stream,
                                double horizon = 1.0) {
  std::vector<double> vals{0.0, stream.next()};
  for (int lev = 1; lev <= grid.level; ++lev) {
    std::vector<double> fine(vals.size() * 2 - 1);
    const double sd = std::ldexp(1.0, -(lev + 1) / 2) * ((lev + 1) % 2 ? std::sqrt(0.5) : 1.0);
    for (size_t i = 0; i + 1 < vals.size(); ++i) {
      fine[2 * i] = vals[i];
      fine[2 * i + 1] = 0.5 * (vals[i] + vals[i + 1]) + sd * stream.next();
    }
    fine.back() = vals.back();
    vals = std::move(fine);
  }
  if (horizon != 1.0) {
    const double root = std::sqrt(horizon);
    for (double& v : vals) v *= root;
  }
  return PathSample(grid, std::move(vals), horizon);
}

/// The ladder weights (2^m/t) int_{cell i} K(t,r) dr, i = 0..2^m - 1.
/// For H = 1/2 every weight is exactly 1.
inline std::vector<double> dyadic_weights(const KernelSpec& spec, double t, int m) {
  if (!(t > 0.0 && t <= 1.0)) throw std::domain_error("dyadic_weights: need t in (0,1]");
  if (m < 0 || m > 24) throw std::domain_error("dyadic_weights: level out of range");
  const int n = 1 << m;
  std::vector<double> w(static_cast<size_t>(n), 1.0);
  if (spec.is_brownian()) return w;
  const double dt = t / std::ldexp(1.0, m);
  const double scale = std::ldexp(1.0, m) / t;
  for (int i = 0; i < n; ++i)
    w[static_cast<size_t>(i)] = scale * cell_integral(spec, t, i * dt, (i + 1) * dt);
  return w;
}

/// B_t^{(m)}(omega): the weighted increment sum of the dyadic ladder, with
/// precomputed weights. omega must live on a grid of level >= m rescaled to t.
inline double approx_fbm_at(const std::vector<double>& weights, int m, const PathSample& omega,
                            double t) {
  const int n = 1 << m;
  if (static_cast<int>(weights.size()) != n)
    throw std::invalid_argument("approx_fbm_at: weight count must be 2^m");
  if (omega.level() < m) throw std::invalid_argument("approx_fbm_at: omega level below m");
  if (std::abs(omega.horizon - t) > 1e-12 * std::max(1.0, t))
    throw std::invalid_argument("approx_fbm_at: omega horizon differs from t");
  const int stride = 1 << (omega.level() - m);
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    const double inc = omega.values[static_cast<size_t>((i + 1) * stride)] -
                       omega.values[static_cast<size_t>(i * stride)];
    acc += weights[static_cast<size_t>(i)] * inc;
  }
  return acc;
}

inline double approx_fbm_at(const KernelSpec& spec, double t, int m, const PathSample& omega) {
  return approx_fbm_at(dyadic_weights(spec, t, m), m, omega, t);
}

/// F_m: the piecewise-linear interpolation of a (2^m+1)-vector on [0,1].
/// Evaluation at the knots reproduces the inputs exactly.
class PiecewiseLinearPath {
 public:
  PiecewiseLinearPath(std::vector<double> values, int m)
      : values_(std::move(values)), level_(m) {
    if (static_cast<int>(values_.size()) != (1 << m) + 1)
      throw std::invalid_argument("interpolate: value count must be 2^m + 1");
  }

  double operator()(double t) const {
    if (!(t >= 0.0 && t <= 1.0)) throw std::domain_error("interpolate: query must be in [0,1]");
    const double pos = std::ldexp(t, level_);
    int k = static_cast<int>(pos);
    if (k >= (1 << level_)) k = (1 << level_) - 1;
    const double frac = pos - k;
    const size_t idx = static_cast<size_t>(k);
    return values_[idx] + frac * (values_[idx + 1] - values_[idx]);
  }

  int level() const { return level_; }
  const std::vector<double>& knot_values() const { return values_; }

 private:
  std::vector<double> values_;
  int level_;
};

inline PiecewiseLinearPath interpolate(std::vector<double> values, int m) {
  if (values.empty() || values.front() != 0.0)
    throw std::invalid_argument("interpolate: paths start at the origin");
  return PiecewiseLinearPath(std::move(values), m);
}

/// ||B_t^{(m+1)} - B_t^{(m)}||_2^2 = (2^m/t) sum_i M_i^2, evaluated from the
/// level-(m+1) cell integrals. Zero for H = 1/2.
inline double exact_l2_difference(const KernelSpec& spec, double t, int m) {
  if (!(t > 0.0 && t <= 1.0)) throw std::domain_error("exact_l2_difference: need t in (0,1]");
  if (m < 0 || m > 24) throw std::domain_error("exact_l2_difference: level out of range");
  if (spec.is_brownian()) return 0.0;
  const int n = 1 << m;
  const double dt = t / std::ldexp(1.0, m + 1);
  double acc = 0.0;
  double even = cell_integral(spec, t, 0.0, dt);
  for (int i = 0; i < n; ++i) {
    const double odd = cell_integral(spec, t, (2 * i + 1) * dt, (2 * i + 2) * dt);
    const double m_i = odd - even;
    acc += m_i * m_i;
    if (i + 1 < n) even = cell_integral(spec, t, (2 * i + 2) * dt, (2 * i + 3) * dt);
  }
  return std::ldexp(1.0, m) / t * acc;
}

struct DecayBounds {
  double lower_component = 0.0;  // closed-form bound with exponents 2-2H and 2H-1
  double upper_component = 0.0;  // (1/2) (t/2^{m+1})^{2H}
};

/// The proven decay bounds on the exact L2 difference. The first route rests
/// on the kernel envelope K(t,s) <= c_H s^{1/2-H} (t-s)^{H-1/2} t^{H-1/2} /
/// (H-1/2), giving C1 = (c_H (3/2)^{2H-1}/(H-1/2))^2 (valid for every t <= 1
/// and m >= 0); the second uses C2 = (2 c_H / (H-1/2))^2, valid for t <= 1.
inline DecayBounds decay_bounds(const KernelSpec& spec, double t, int m) {
  if (spec.is_brownian()) throw std::domain_error("decay_bounds: defined for H > 1/2");
  if (!(t > 0.0 && t <= 1.0)) throw std::domain_error("decay_bounds: need t in (0,1]");
  const double h = spec.hurst();
  const double c = spec.c_norm();
  const double d = t / std::ldexp(1.0, m + 1);
  const double c1 = std::pow(c * std::pow(1.5, 2.0 * h - 1.0) / (h - 0.5), 2);
  const double c2 = std::pow(2.0 * c / (h - 0.5), 2);
  DecayBounds b;
  b.lower_component =
      c1 / (2.0 - 2.0 * h) *
          (std::pow(t - d, 2.0 - 2.0 * h) - std::pow(t, 2.0 - 2.0 * h) +
           std::pow(d, 2.0 - 2.0 * h)) +
      c2 * std::pow(d, 2.0 * h - 1.0) / (2.0 - 2.0 * h) * std::pow(t - d, 2.0 - 2.0 * h);
  b.upper_component = 0.5 * std::pow(d, 2.0 * h);
  return b;
}

struct VariationBound {
  double value = 0.0;                 // C_{q,gamma} sum_n n^gamma sum_k |delta|^q
  std::optional<double> brute_force;  // sup over all knot partitions, when 2^M <= 2^10
};

/// Dyadic-level bound on the q-variation of u - w.
/// The diagnostic brute-force supremum is computed by dynamic programming over
/// all partitions of the level-M grid when the grid has at most 2^10 cells.
inline VariationBound dyadic_variation_bound(const PathSample& u, const PathSample& w, double q,
                                             double gamma, double c_q_gamma = 1.0) {
  if (!(q > 1.0)) throw std::domain_error("dyadic_variation_bound: need q > 1");
  if (!(gamma > q - 1.0)) throw std::domain_error("dyadic_variation_bound: need gamma > q - 1");
  if (u.level() != w.level() || u.horizon != w.horizon)
    throw std::invalid_argument("dyadic_variation_bound: paths must share a grid");
  const int big_m = u.level();
  const int n = 1 << big_m;
  std::vector<double> d(static_cast<size_t>(n) + 1);
  for (int k = 0; k <= n; ++k)
    d[static_cast<size_t>(k)] = u.values[static_cast<size_t>(k)] - w.values[static_cast<size_t>(k)];

  VariationBound out;
  double levels = 0.0;
  for (int lev = 1; lev <= big_m; ++lev) {
    const int stride = 1 << (big_m - lev);
    double level_sum = 0.0;
    for (int k = stride; k <= n; k += stride)
      level_sum += std::pow(std::abs(d[static_cast<size_t>(k)] - d[static_cast<size_t>(k - stride)]), q);
    levels += std::pow(static_cast<double>(lev), gamma) * level_sum;
  }
  out.value = c_q_gamma * levels;

  if (n <= 1024) {
    std::vector<double> best(static_cast<size_t>(n) + 1, 0.0);
    for (int j = 1; j <= n; ++j) {
      double b = 0.0;
      for (int i = 0; i < j; ++i) {
        const double cand = best[static_cast<size_t>(i)] +
                            std::pow(std::abs(d[static_cast<size_t>(j)] - d[static_cast<size_t>(i)]), q);
        b = std::max(b, cand);
      }
      best[static_cast<size_t>(j)] = b;
    }
    out.brute_force = best.back();
  }
  return out;
}

/// Per-level exact L2 differences next to their proven decay bounds, with the
/// fitted log2 slope.
struct ConvergenceReport {
  double hurst = 0.0;
  double t = 0.0;
  std::vector<int> levels;
  std::vector<double> exact_l2;
  std::vector<double> lower;
  std::vector<double> upper;
  double fitted_slope = 0.0;
};

inline ConvergenceReport convergence_report(const KernelSpec& spec, double t,
                                            const std::vector<int>& levels) {
  if (levels.empty()) throw std::invalid_argument("convergence_report: no levels");
  ConvergenceReport rep;
  rep.hurst = spec.hurst();
  rep.t = t;
  rep.levels = levels;
  for (int m : levels) {
    rep.exact_l2.push_back(exact_l2_difference(spec, t, m));
    if (spec.is_brownian()) {
      rep.lower.push_back(0.0);
      rep.upper.push_back(0.0);
    } else {
      const DecayBounds b = decay_bounds(spec, t, m);
      rep.lower.push_back(b.lower_component);
      rep.upper.push_back(b.upper_component);
    }
  }
  // least-squares slope of log2(exact_l2) against m
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  int cnt = 0;
  for (size_t i = 0; i < rep.levels.size(); ++i) {
    if (!(rep.exact_l2[i] > 0.0)) continue;
    const double x = rep.levels[i];
    const double y = std::log2(rep.exact_l2[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++cnt;
  }
  rep.fitted_slope =
      cnt >= 2 ? (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx) : std::nan("");
  return rep;
}

}  // namespace fbmlab
