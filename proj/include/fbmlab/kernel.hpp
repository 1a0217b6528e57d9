#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "fbmlab/quadrature.hpp"

namespace fbmlab {

/// c_H = [H(2H-1)/B(2-2H, H-1/2)]^{1/2}, the unique positive normalization
/// for which the squared-kernel cross integral reproduces the fBM covariance.
inline double normalization_constant(double hurst) {
  if (!(hurst > 0.5 && hurst < 1.0))
    throw std::domain_error("normalization_constant: hurst must be in (1/2,1)");
  const double lbeta = std::lgamma(2.0 - 2.0 * hurst) + std::lgamma(hurst - 0.5) -
                       std::lgamma(1.5 - hurst);
  return std::sqrt(hurst * (2.0 * hurst - 1.0) * std::exp(-lbeta));
}

namespace detail {

// K(t,s) for H > 1/2 without the public-domain gates; t may exceed the unit
// horizon here because the cell-comparison integrands evaluate K(t + dt, .).
// The substitution v = (u-s)^{H-1/2} makes the integrand smooth:
//   K(t,s) = c_H s^{1/2-H} / (H-1/2) * int_0^{(t-s)^{H-1/2}} (s + v^{1/(H-1/2)})^{H-1/2} dv.
inline double kernel_value(double hurst, double c_norm, double t, double s,
                           const QuadPolicy& pol) {
  if (s >= t) return 0.0;  // K -> 0 as s -> t; shields endpoint rounding in callers
  const double p = hurst - 0.5;
  const double inv_p = 1.0 / p;
  const double vmax = std::pow(t - s, p);
  const double integral = integrate(
      [s, p, inv_p](double v) { return std::pow(s + std::pow(v, inv_p), p); }, 0.0, vmax, pol);
  return c_norm * std::pow(s, -p) * integral * inv_p;
}

// int_a^b f(r) dr where f carries an integrable r^{1/2-H}-type singularity at
// r = 0; handled by the power substitution r = w^{1/(3/2-H)}.
template <class F>
inline double integrate_from_origin(const F& f, double hurst, double b, const QuadPolicy& pol) {
  const double q = 1.0 / (1.5 - hurst);
  return integrate(
      [&f, q](double w) {
        if (w <= 0.0) return 0.0;
        return f(std::pow(w, q)) * q * std::pow(w, q - 1.0);
      },
      0.0, std::pow(b, 1.0 / q), pol);
}

inline double fbm_cov_formula(double hurst, double s, double t) {
  return 0.5 * (std::pow(t, 2.0 * hurst) + std::pow(s, 2.0 * hurst) -
                std::pow(std::abs(t - s), 2.0 * hurst));
}

inline QuadPolicy inner(const QuadPolicy& pol) {
  return QuadPolicy{pol.abs_tol * 1e-2, pol.max_depth};
}

}  // namespace detail

/// Hurst parameter, kernel normalization and quadrature policy for the
/// singular Volterra kernel. Construction runs a covariance self-audit on a
/// fixed probe set unless run_audit is false.
class KernelSpec {
 public:
  explicit KernelSpec(double hurst, QuadPolicy quad = {}, bool run_audit = true);

  double hurst() const { return hurst_; }
  double c_norm() const { return c_norm_; }
  const QuadPolicy& quad() const { return quad_; }
  bool is_brownian() const { return hurst_ == 0.5; }

 private:
  double hurst_;
  double c_norm_;
  QuadPolicy quad_;
};

/// K(t,s) = c_H s^{1/2-H} int_s^t (u-s)^{H-3/2} u^{H-1/2} du for H > 1/2;
/// the indicator kernel (constant 1 on s < t) for H = 1/2.
inline double eval_kernel(const KernelSpec& spec, double t, double s) {
  if (!(s > 0.0 && s < t)) throw std::domain_error("eval_kernel: need 0 < s < t");
  if (!(t <= 1.0)) throw std::domain_error("eval_kernel: horizon is [0,1]");
  if (spec.is_brownian()) return 1.0;
  return detail::kernel_value(spec.hurst(), spec.c_norm(), t, s, spec.quad());
}

/// int_a^b K(t,r) dr; integrable despite the r^{1/2-H} singularity at a = 0.
inline double cell_integral(const KernelSpec& spec, double t, double a, double b) {
  if (!(a >= 0.0 && a < b && b <= t && t <= 1.0))
    throw std::domain_error("cell_integral: need 0 <= a < b <= t <= 1");
  if (spec.is_brownian()) return b - a;
  const QuadPolicy in = detail::inner(spec.quad());
  const auto f = [&spec, &in, t](double r) {
    return detail::kernel_value(spec.hurst(), spec.c_norm(), t, r, in);
  };
  if (a == 0.0) return detail::integrate_from_origin(f, spec.hurst(), b, spec.quad());
  return integrate(f, a, b, spec.quad());
}

/// int_0^s K(t,u) K(s,u) du, the Malliavin inner product <DB_s, DB_t>.
/// Equals the fBM covariance within quadrature tolerance.
inline double cross_covariance_quadrature(const KernelSpec& spec, double s, double t) {
  if (!(s > 0.0 && s <= t && t <= 1.0))
    throw std::domain_error("cross_covariance_quadrature: need 0 < s <= t <= 1");
  if (spec.is_brownian()) return s;
  const double h = spec.hurst();
  const double c = spec.c_norm();
  const QuadPolicy in = detail::inner(spec.quad());
  // integrand ~ u^{1-2H} near 0: substitute u = w^{1/(2-2H)}
  const double q = 1.0 / (2.0 - 2.0 * h);
  return integrate(
      [&, s, t](double w) {
        const double u = std::pow(w, q);
        const double ks = detail::kernel_value(h, c, s, u, in);
        const double kt = (s == t) ? ks : detail::kernel_value(h, c, t, u, in);
        return kt * ks * q * std::pow(w, q - 1.0);
      },
      0.0, std::pow(s, 1.0 / q), spec.quad());
}

inline KernelSpec::KernelSpec(double hurst, QuadPolicy quad, bool run_audit)
    : hurst_(hurst), quad_(quad) {
  if (!(hurst >= 0.5 && hurst < 1.0))
    throw std::domain_error("KernelSpec: hurst must be in [1/2,1)");
  c_norm_ = (hurst == 0.5) ? 1.0 : normalization_constant(hurst);
  if (run_audit && hurst != 0.5) {
    const double tol = std::max(1e-8, 100.0 * quad_.abs_tol);
    const double probes[3][2] = {{0.5, 1.0}, {0.25, 0.75}, {0.3, 0.3}};
    for (const auto& st : probes) {
      const double got = cross_covariance_quadrature(*this, st[0], st[1]);
      const double want = detail::fbm_cov_formula(hurst, st[0], st[1]);
      if (std::abs(got - want) > tol)
        throw std::runtime_error("KernelSpec: covariance audit failed at (s,t)=(" +
                                 std::to_string(st[0]) + "," + std::to_string(st[1]) + ")");
    }
  }
}

/// One dyadic half-cell comparison record: the exact adjacent-cell integral
/// difference M_i and its lower/upper comparison integrals L_i, U_i.
struct CellComparison {
  int level = 0;
  int index = 0;
  double t = 0.0;
  double m_i = 0.0;
  double l_i = 0.0;
  double u_i = 0.0;
};

/// All 2^m comparison records at level m for terminal time t. For H = 1/2 the
/// three quantities vanish identically and zeros are returned.
inline std::vector<CellComparison> cell_comparisons(const KernelSpec& spec, double t, int m) {
  if (!(t > 0.0 && t <= 1.0)) throw std::domain_error("cell_comparisons: need t in (0,1]");
  if (m < 0 || m > 24) throw std::domain_error("cell_comparisons: level out of range");
  const int n = 1 << m;
  std::vector<CellComparison> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) {
    out[i].level = m;
    out[i].index = i;
    out[i].t = t;
  }
  if (spec.is_brownian()) return out;

  const double h = spec.hurst();
  const double c = spec.c_norm();
  const double dt = t / std::ldexp(1.0, m + 1);  // t / 2^{m+1}
  const QuadPolicy in = detail::inner(spec.quad());

  double prev_cell = cell_integral(spec, t, 0.0, dt);
  for (int i = 0; i < n; ++i) {
    const double a0 = 2 * i * dt;
    const double a1 = (2 * i + 1) * dt;
    const double a2 = (2 * i + 2) * dt;
    const double cur_cell = cell_integral(spec, t, a1, a2);
    out[i].m_i = cur_cell - prev_cell;
    if (i + 1 < n) prev_cell = cell_integral(spec, t, a2, a2 + dt);

    const auto fu = [&, t](double s) {
      return detail::kernel_value(h, c, t - dt, s, in) - detail::kernel_value(h, c, t, s, in);
    };
    const auto fl = [&, t](double s) {
      return detail::kernel_value(h, c, t, s + dt, in) -
             std::pow((s + dt) / s, h - 0.5) * detail::kernel_value(h, c, t + dt, s + dt, in);
    };
    if (i == 0) {
      out[i].u_i = detail::integrate_from_origin(fu, h, a1, spec.quad());
      out[i].l_i = detail::integrate_from_origin(fl, h, a1, spec.quad());
    } else {
      out[i].u_i = integrate(fu, a0, a1, spec.quad());
      out[i].l_i = integrate(fl, a0, a1, spec.quad());
    }
  }
  return out;
}

}  // namespace fbmlab
