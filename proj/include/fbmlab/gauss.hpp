#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

namespace fbmlab {

/// Covariance of fBM on [0,1]: (t^{2H} + s^{2H} - |t-s|^{2H}) / 2.
inline double fbm_covariance(double hurst, double s, double t) {
  if (!(hurst >= 0.5 && hurst < 1.0))
    throw std::domain_error("fbm_covariance: hurst must be in [1/2,1)");
  if (!(s >= 0.0 && s <= 1.0 && t >= 0.0 && t <= 1.0))
    throw std::domain_error("fbm_covariance: times must lie in [0,1]");
  return 0.5 * (std::pow(t, 2.0 * hurst) + std::pow(s, 2.0 * hurst) -
                std::pow(std::abs(t - s), 2.0 * hurst));
}

/// Identifies one reproducible draw sequence. Identical (seed, stream_id)
/// always reproduce identical draws; distinct stream_ids are independent
/// streams safe to hand to concurrent consumers.
struct SeededStream {
  std::uint64_t seed = 0;
  std::uint64_t stream_id = 0;
};

/// Standard-normal generator owned by a single consumer.
class GaussianStream {
 public:
  explicit GaussianStream(SeededStream s) : eng_(make_engine(s)) {}

  double next() { return dist_(eng_); }
  std::mt19937_64& engine() { return eng_; }

 private:
  static std::mt19937_64 make_engine(SeededStream s) {
    std::seed_seq seq{static_cast<std::uint32_t>(s.seed), static_cast<std::uint32_t>(s.seed >> 32),
                      static_cast<std::uint32_t>(s.stream_id),
                      static_cast<std::uint32_t>(s.stream_id >> 32)};
    return std::mt19937_64(seq);
  }

  std::mt19937_64 eng_;
  std::normal_distribution<double> dist_;
};

class CovarianceError : public std::runtime_error {
 public:
  explicit CovarianceError(const std::string& what) : std::runtime_error(what) {}
};

/// Grid times, fBM covariance matrix and its lower-triangular Cholesky factor.
/// Immutable after construction; jitter_used records any diagonal shift that
/// was needed to factorize a numerically singular matrix.
class CovarianceSpec {
 public:
  CovarianceSpec(double hurst, std::vector<double> times, std::vector<double> sigma,
                 std::vector<double> chol, double jitter_used)
      : hurst_(hurst),
        times_(std::move(times)),
        sigma_(std::move(sigma)),
        chol_(std::move(chol)),
        jitter_used_(jitter_used) {}

  int dim() const { return static_cast<int>(times_.size()); }
  double hurst() const { return hurst_; }
  const std::vector<double>& times() const { return times_; }
  double sigma(int i, int j) const { return sigma_[static_cast<size_t>(i) * times_.size() + j]; }
  double chol(int i, int j) const { return chol_[static_cast<size_t>(i) * times_.size() + j]; }
  double jitter_used() const { return jitter_used_; }

  /// Forward substitution: solves L y = x.
  std::vector<double> solve_lower(const std::vector<double>& x) const {
    const int n = dim();
    if (static_cast<int>(x.size()) != n)
      throw std::invalid_argument("solve_lower: dimension mismatch");
    std::vector<double> y(x);
    for (int i = 0; i < n; ++i) {
      double acc = y[i];
      for (int j = 0; j < i; ++j) acc -= chol(i, j) * y[j];
      y[i] = acc / chol(i, i);
    }
    return y;
  }

 private:
  double hurst_;
  std::vector<double> times_;
  std::vector<double> sigma_;  // row-major, symmetric
  std::vector<double> chol_;   // row-major, lower triangular
  double jitter_used_;
};

namespace detail {

// Lower Cholesky; returns false on a non-positive pivot.
inline bool cholesky(const std::vector<double>& a, int n, std::vector<double>& l) {
  l.assign(a.size(), 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double acc = a[static_cast<size_t>(i) * n + j];
      for (int k = 0; k < j; ++k)
        acc -= l[static_cast<size_t>(i) * n + k] * l[static_cast<size_t>(j) * n + k];
      if (i == j) {
        if (!(acc > 0.0)) return false;
        l[static_cast<size_t>(i) * n + j] = std::sqrt(acc);
      } else {
        l[static_cast<size_t>(i) * n + j] = acc / l[static_cast<size_t>(j) * n + j];
      }
    }
  }
  return true;
}

}  // namespace detail

/// Builds the covariance matrix sigma_ij = Cov(t_i, t_j) on a strictly
/// increasing grid in (0,1] and factorizes it, escalating diagonal jitter
/// from 1e-12 * max(sigma_ii) tenfold at most six times if needed.
inline CovarianceSpec build_covariance(double hurst, std::vector<double> times) {
  const int n = static_cast<int>(times.size());
  if (n == 0) throw std::domain_error("build_covariance: empty grid");
  for (int i = 0; i < n; ++i) {
    if (!(times[i] > 0.0 && times[i] <= 1.0))
      throw std::domain_error("build_covariance: times must lie in (0,1]");
    if (i > 0 && !(times[i] > times[i - 1]))
      throw std::domain_error("build_covariance: times must be strictly increasing");
  }
  std::vector<double> sigma(static_cast<size_t>(n) * n);
  double max_diag = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = fbm_covariance(hurst, times[i], times[j]);
      sigma[static_cast<size_t>(i) * n + j] = v;
      sigma[static_cast<size_t>(j) * n + i] = v;
    }
    max_diag = std::max(max_diag, sigma[static_cast<size_t>(i) * n + i]);
  }

  std::vector<double> chol;
  double jitter = 0.0;
  if (!detail::cholesky(sigma, n, chol)) {
    jitter = 1e-12 * max_diag;
    std::vector<double> shifted(sigma);
    for (int attempt = 0;; ++attempt) {
      for (int i = 0; i < n; ++i)
        shifted[static_cast<size_t>(i) * n + i] = sigma[static_cast<size_t>(i) * n + i] + jitter;
      if (detail::cholesky(shifted, n, chol)) break;
      if (attempt >= 6) throw CovarianceError("build_covariance: not positive definite");
      jitter *= 10.0;
    }
  }
  return CovarianceSpec(hurst, std::move(times), std::move(sigma), std::move(chol), jitter);
}

/// One exact draw from N(0, sigma): chol * z with z standard normal.
inline std::vector<double> sample_gaussian(const CovarianceSpec& spec, GaussianStream& stream) {
  const int n = spec.dim();
  std::vector<double> z(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) z[static_cast<size_t>(i)] = stream.next();
  std::vector<double> x(static_cast<size_t>(n), 0.0);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = 0; j <= i; ++j) acc += spec.chol(i, j) * z[static_cast<size_t>(j)];
    x[static_cast<size_t>(i)] = acc;
  }
  return x;
}

/// Probabilists' Hermite polynomial He_n via He_{n+1} = x He_n - n He_{n-1}.
inline double hermite(int n, double x) {
  if (n < 0) throw std::domain_error("hermite: degree must be nonnegative");
  if (n == 0) return 1.0;
  double prev = 1.0, cur = x;
  for (int k = 1; k < n; ++k) {
    const double next = x * cur - static_cast<double>(k) * prev;
    prev = cur;
    cur = next;
  }
  return cur;
}

/// (n+1)(q-1)^{n/2}, the factor bounding ||F||_q / ||F||_2 on degree-n chaos.
inline double hypercontractivity_bound(int n, double q) {
  if (n < 0) throw std::domain_error("hypercontractivity_bound: degree must be nonnegative");
  if (!(q > 2.0)) throw std::domain_error("hypercontractivity_bound: need q > 2");
  return (n + 1.0) * std::pow(q - 1.0, 0.5 * n);
}

/// n^{l/2}, bounding the L2 norm of the l-th derivative on degree-n chaos.
inline double derivative_norm_bound(int n, int l) {
  if (n < 0 || l < 0 || l > n) throw std::domain_error("derivative_norm_bound: need 0 <= l <= n");
  if (l == 0) return 1.0;
  return std::pow(static_cast<double>(n), 0.5 * l);
}

}  // namespace fbmlab
