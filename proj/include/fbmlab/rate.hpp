#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fbmlab/gauss.hpp"

namespace fbmlab {

/// I_n(x) = x^T Sigma^{-1} x / 2, evaluated by a triangular solve against the
/// Cholesky factor; Sigma^{-1} is never formed.
inline double rate_fd(const CovarianceSpec& cov, const std::vector<double>& x) {
  const std::vector<double> y = cov.solve_lower(x);
  double acc = 0.0;
  for (double v : y) acc += v * v;
  return 0.5 * acc;
}

/// |x|_Sigma = sqrt(x^T Sigma^{-1} x).
inline double sigma_norm(const CovarianceSpec& cov, const std::vector<double>& x) {
  const std::vector<double> y = cov.solve_lower(x);
  double acc = 0.0;
  for (double v : y) acc += v * v;
  return std::sqrt(acc);
}

/// inf of I_n over the Sigma-ball around center: ((|center|_Sigma - radius)^+)^2 / 2.
inline double rate_ball_inf(const CovarianceSpec& cov, const std::vector<double>& center,
                            double radius) {
  if (!(radius >= 0.0)) throw std::domain_error("rate_ball_inf: need radius >= 0");
  const double slack = std::max(sigma_norm(cov, center) - radius, 0.0);
  return 0.5 * slack * slack;
}

struct RateResult {
  enum class Method { closed_form, quadratic_solve, grid_search };

  double value = 0.0;
  std::optional<std::vector<double>> argmin;
  Method method = Method::closed_form;
};

inline const char* to_string(RateResult::Method m) {
  switch (m) {
    case RateResult::Method::closed_form: return "closed_form";
    case RateResult::Method::quadratic_solve: return "quadratic_solve";
    default: return "grid_search";
  }
}

/// inf of I_n over {max_k x_k >= a} (one-sided) or {max_k |x_k| >= a}. The
/// active coordinate is enumerated: for each k the minimum-norm point with
/// x_k = a is a Sigma_{.k} / sigma_kk with value a^2 / (2 sigma_kk), so the
/// infimum is attained at the largest-variance coordinate. The two-sided case
/// coincides by the symmetry of the quadratic form.
inline RateResult rate_exceedance_inf(const CovarianceSpec& cov, double a, bool one_sided) {
  (void)one_sided;  // identical by symmetry; the flag is part of the event description
  if (!(a >= 0.0)) throw std::domain_error("rate_exceedance_inf: need a >= 0");
  const int n = cov.dim();
  RateResult res;
  res.method = RateResult::Method::closed_form;
  if (a == 0.0) {
    res.value = 0.0;
    res.argmin = std::vector<double>(static_cast<size_t>(n), 0.0);
    return res;
  }
  int kbest = 0;
  for (int k = 1; k < n; ++k)
    if (cov.sigma(k, k) > cov.sigma(kbest, kbest)) kbest = k;
  res.value = a * a / (2.0 * cov.sigma(kbest, kbest));
  std::vector<double> arg(static_cast<size_t>(n));
  for (int j = 0; j < n; ++j)
    arg[static_cast<size_t>(j)] = a * cov.sigma(j, kbest) / cov.sigma(kbest, kbest);
  res.argmin = std::move(arg);
  return res;
}

/// J_m of a piecewise-linear path given by its 2^m + 1 dyadic knot values
/// (first value 0): equals I_{2^m} of the remaining knots under the fBM
/// covariance on {k/2^m}. Inputs are piecewise linear by construction, so the
/// +infinity branch of J_m is never reached here.
inline double rate_pl_path(double hurst, int m, const std::vector<double>& knot_values) {
  if (m < 0 || m > 14) throw std::domain_error("rate_pl_path: level out of range");
  const int n = 1 << m;
  if (static_cast<int>(knot_values.size()) != n + 1)
    throw std::invalid_argument("rate_pl_path: knot count must be 2^m + 1");
  if (knot_values.front() != 0.0)
    throw std::invalid_argument("rate_pl_path: paths start at the origin");
  std::vector<double> times(static_cast<size_t>(n));
  const double h = std::ldexp(1.0, -m);
  for (int k = 1; k <= n; ++k) times[static_cast<size_t>(k - 1)] = k * h;
  const CovarianceSpec cov = build_covariance(hurst, std::move(times));
  const std::vector<double> x(knot_values.begin() + 1, knot_values.end());
  return rate_fd(cov, x);
}

}  // namespace fbmlab
