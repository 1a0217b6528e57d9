#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "fbmlab/approx.hpp"
#include "fbmlab/kernel.hpp"

namespace fbmlab {

/// Index (p, r) of the capacity c_{p,r}.
struct CapacityIndex {
  double p = 2.0;
  int r = 0;
};

/// DB_t evaluated at the grid-cell midpoints: K(t, s_j) 1_{s_j < t}. The
/// midpoint representation keeps every evaluation away from the s = 0 pole.
inline std::vector<double> malliavin_kernel(const KernelSpec& spec, double t,
                                            const DyadicGrid& grid) {
  if (!(t > 0.0 && t <= 1.0)) throw std::domain_error("malliavin_kernel: need t in (0,1]");
  const int n = grid.cells();
  const double h = 1.0 / std::ldexp(1.0, grid.level);
  std::vector<double> out(static_cast<size_t>(n), 0.0);
  for (int j = 0; j < n; ++j) {
    const double s = (j + 0.5) * h;
    if (s < t) out[static_cast<size_t>(j)] = eval_kernel(spec, t, s);
  }
  return out;
}

/// The step-function derivative u_t^{(m)} of B_t^{(m)}: cell value i equals
/// (2^m/t) int over cell i of K(t, .).
inline std::vector<double> step_derivative(const KernelSpec& spec, double t, int m) {
  return dyadic_weights(spec, t, m);
}

/// C_{r,p} ||.||_2^2 with C_{r,p} = 36 (r+1)(p-1) 2^{r/2}: the Sobolev-norm
/// bound for the squared ladder difference.
inline double quadratic_sobolev_bound(double l2_norm, const CapacityIndex& idx) {
  if (!(idx.p > 2.0)) throw std::domain_error("quadratic_sobolev_bound: need p > 2");
  if (idx.r < 0) throw std::domain_error("quadratic_sobolev_bound: need r >= 0");
  return 36.0 * (idx.r + 1.0) * (idx.p - 1.0) * std::pow(2.0, 0.5 * idx.r) * l2_norm * l2_norm;
}

/// Chebyshev for capacities: c_{p,r}(phi > lambda) <= ||phi||_{D_r^p} / lambda.
inline double chebyshev_capacity_bound(double sobolev_norm, double lambda) {
  if (!(lambda > 0.0)) throw std::domain_error("chebyshev_capacity_bound: need lambda > 0");
  if (!(sobolev_norm >= 0.0))
    throw std::domain_error("chebyshev_capacity_bound: norm must be nonnegative");
  return sobolev_norm / lambda;
}

class InfeasibleParams : public std::domain_error {
 public:
  explicit InfeasibleParams(const std::string& constraint)
      : std::domain_error("infeasible tail params: " + constraint), constraint_(constraint) {}
  const std::string& constraint() const { return constraint_; }

 private:
  std::string constraint_;
};

namespace detail {

// sum_{n>=1} n^gamma 2^{-n theta}, summed ascending until the geometric tail
// bound past the peak falls below 1e-18 of the partial sum.
inline double gamma_theta_series(double theta, double gamma) {
  const double peak = gamma / (theta * 0.6931471805599453);
  double total = 0.0;
  for (long n = 1;; ++n) {
    const double term = std::exp(gamma * std::log(static_cast<double>(n)) -
                                 static_cast<double>(n) * theta * 0.6931471805599453);
    total += term;
    if (static_cast<double>(n) > peak) {
      const double ratio =
          std::pow((n + 1.0) / static_cast<double>(n), gamma) * std::exp2(-theta);
      if (ratio < 1.0 && term * ratio / (1.0 - ratio) < 1e-18 * total) return total;
    }
    if (n > 100000000L) throw std::runtime_error("gamma_theta_series: no convergence");
  }
}

}  // namespace detail

struct TailDerived {
  double beta = 0.0;
  double c_theta_gamma = 0.0;  // (sum n^gamma 2^{-n theta})^{-1}
  double c_q_theta = 0.0;      // (2^{2(1-(1+theta)/q)-1} - 1)^{-1}
  double c_n_h = 0.0;          // 2^{4N-1} (4N-1)^N (1 + 2^{2N(1-H)})
  double c_rpnh = 0.0;         // (r+1)(2N+1)(p-1)^{N/2}(2N)^{r/2} C_{N,H}
  double c_alpha = 0.0;        // 1 - 2^{-alpha}
};

/// The full parameter tuple of the capacity tail bound, with every derived
/// constant of the capacity tail bound.
struct TailBoundParams {
  int n_chaos = 1;  // the Chebyshev moment order N
  double q = 0.0;
  double theta = 0.0;
  double gamma = 0.0;
  double alpha = 0.0;
  CapacityIndex idx;
  double hurst = 0.0;
  TailDerived derived;
};

/// Checks every feasibility inequality and fills in the derived constants;
/// throws InfeasibleParams naming the first violated constraint.
inline TailBoundParams validate_tail_params(TailBoundParams c) {
  if (!(c.hurst > 0.5 && c.hurst < 1.0)) throw InfeasibleParams("hurst in (1/2,1)");
  if (!(c.idx.p > 1.0)) throw InfeasibleParams("p > 1");
  if (c.idx.r < 0) throw InfeasibleParams("r >= 0");
  if (c.n_chaos < 1) throw InfeasibleParams("N >= 1");
  if (2 * c.n_chaos < c.idx.r) throw InfeasibleParams("N >= r/2");
  const double h = c.hurst;
  const double n = c.n_chaos;
  if (!(c.q > 1.0 / (h - 0.5))) throw InfeasibleParams("q > (H-1/2)^{-1}");
  const double theta_max = c.q * h - c.q / (2.0 * n) - 1.0;
  if (!(c.theta > 0.0 && c.theta < theta_max))
    throw InfeasibleParams("theta in (0, qH - q/(2N) - 1)");
  if (!(c.gamma > c.q - 1.0)) throw InfeasibleParams("gamma > q - 1");
  if (!(2.0 * (1.0 - (1.0 + c.theta) / c.q) - 1.0 > 0.0))
    throw InfeasibleParams("q > 2(1 + theta)");
  const double alpha_max = h - (1.0 + c.theta) / c.q - 1.0 / (2.0 * n);
  if (!(c.alpha > 0.0 && c.alpha < alpha_max))
    throw InfeasibleParams("alpha in (0, H - (1+theta)/q - 1/(2N))");

  c.derived.beta = 2.0 * n * (h - (1.0 + c.theta) / c.q - c.alpha) - 1.0;
  c.derived.c_theta_gamma = 1.0 / detail::gamma_theta_series(c.theta, c.gamma);
  c.derived.c_q_theta = 1.0 / (std::exp2(2.0 * (1.0 - (1.0 + c.theta) / c.q) - 1.0) - 1.0);
  c.derived.c_n_h = std::exp2(4.0 * n - 1.0) * std::pow(4.0 * n - 1.0, n) *
                    (1.0 + std::exp2(2.0 * n * (1.0 - h)));
  c.derived.c_rpnh = (c.idx.r + 1.0) * (2.0 * n + 1.0) * std::pow(c.idx.p - 1.0, 0.5 * n) *
                     std::pow(2.0 * n, 0.5 * c.idx.r) * c.derived.c_n_h;
  c.derived.c_alpha = 1.0 - std::exp2(-c.alpha);
  return c;
}

/// The capacity bound for the level-m ladder difference event:
///   C_{q,gamma,theta,N}^{-1} C_{q,theta} C_{r,p,N,H} lambda^{-2N}
///   2^{-m (2N(H - (1+theta)/q) - 1)},
/// where C_{q,gamma,theta,N} = C_{q,gamma}^{-2N/q} C_{theta,gamma}^{2N/q}.
inline double capacity_tail_bound(int m, double lambda, const TailBoundParams& params,
                                  double c_q_gamma = 1.0) {
  if (!(lambda > 0.0)) throw std::domain_error("capacity_tail_bound: need lambda > 0");
  const double n = params.n_chaos;
  const double exponent = 2.0 * n * (params.hurst - (1.0 + params.theta) / params.q) - 1.0;
  if (!(exponent > 0.0)) throw InfeasibleParams("2N(H - (1+theta)/q) - 1 > 0");
  const double two_n_over_q = 2.0 * n / params.q;
  return std::pow(c_q_gamma, two_n_over_q) *
         std::pow(params.derived.c_theta_gamma, -two_n_over_q) * params.derived.c_q_theta *
         params.derived.c_rpnh * std::pow(lambda, -2.0 * n) * std::exp2(-m * exponent);
}

/// Search-mesh configuration for optimize_tail_bound. The defaults pin the
/// exhaustive desk-scale grid: N in 1..8, 20 q points in ((H-1/2)^{-1}, 16],
/// 20 theta points, 20 gamma points in (q-1, q-1+2], 20 alpha points.
struct TailSearchMesh {
  int n_max = 8;
  double q_max = 16.0;
  int q_points = 20;
  int theta_points = 20;
  int gamma_points = 20;
  double gamma_span = 2.0;
  int alpha_points = 20;
};

/// Exhaustive grid search over the feasible region; returns the minimizing
/// tuple and bound, ties broken lexicographically by (N, q, theta, gamma,
/// alpha). The bound does not depend on alpha, so the smallest feasible mesh
/// alpha is reported.
inline std::pair<TailBoundParams, double> optimize_tail_bound(int m, double lambda,
                                                              CapacityIndex idx, double hurst,
                                                              TailSearchMesh mesh = {}) {
  if (!(hurst > 0.5 && hurst < 1.0))
    throw std::domain_error("optimize_tail_bound: hurst must be in (1/2,1)");
  if (!(lambda > 0.0)) throw std::domain_error("optimize_tail_bound: need lambda > 0");
  const double q_min = 1.0 / (hurst - 0.5);
  bool found = false;
  TailBoundParams best;
  double best_bound = 0.0;
  for (int n = std::max(1, (idx.r + 1) / 2); n <= mesh.n_max; ++n) {
    for (int j = 1; j <= mesh.q_points; ++j) {
      const double q = q_min + (mesh.q_max - q_min) * j / mesh.q_points;
      const double theta_max = q * hurst - q / (2.0 * n) - 1.0;
      if (!(theta_max > 0.0)) continue;
      for (int i = 1; i <= mesh.theta_points; ++i) {
        const double theta = theta_max * i / (mesh.theta_points + 1);
        if (!(2.0 * (1.0 - (1.0 + theta) / q) - 1.0 > 0.0)) continue;
        const double alpha_max = hurst - (1.0 + theta) / q - 1.0 / (2.0 * n);
        if (!(alpha_max > 0.0)) continue;
        for (int l = 1; l <= mesh.gamma_points; ++l) {
          const double gamma = (q - 1.0) + mesh.gamma_span * l / mesh.gamma_points;
          TailBoundParams cand;
          cand.n_chaos = n;
          cand.q = q;
          cand.theta = theta;
          cand.gamma = gamma;
          cand.alpha = alpha_max * 1.0 / (mesh.alpha_points + 1);
          cand.idx = idx;
          cand.hurst = hurst;
          cand = validate_tail_params(cand);
          const double bound = capacity_tail_bound(m, lambda, cand);
          if (!found || bound < best_bound) {
            found = true;
            best = cand;
            best_bound = bound;
          }
        }
      }
    }
  }
  if (!found) throw InfeasibleParams("empty feasible region for (hurst, r)");
  return {best, best_bound};
}

}  // namespace fbmlab
