#pragma once

#include <cmath>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace fbmlab {

/// Controls the adaptive quadrature used for all singular-kernel integrals.
struct QuadPolicy {
  double abs_tol = 1e-10;
  int max_depth = 60;       // bisection depth cap per segment
  int max_segments = 4000;  // total active-segment budget
};

class QuadratureError : public std::runtime_error {
 public:
  explicit QuadratureError(const std::string& what) : std::runtime_error(what) {}
};

namespace detail {

// Gauss-Kronrod 7-15 abscissae/weights on [-1,1]; nodes are interior, so
// integrands may be singular at the endpoints of the requested interval.
inline constexpr double gk_nodes[8] = {
    0.0,
    0.405845151377397166906606412076961,
    0.741531185599394439863864773280788,
    0.949107912342758524526189684047851,
    0.207784955007898467600689403773245,
    0.586087235467691130294144838258730,
    0.864864423359769072789712788640926,
    0.991455371120812639206854697526329};
inline constexpr double gauss_w[4] = {
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082};
inline constexpr double kronrod_w[8] = {
    0.209482141084727828012999174891714,
    0.190350578064785409913256402421014,
    0.140653259715525918745189590510238,
    0.063092092629978553290700663189204,
    0.204432940075298892414161999234649,
    0.169004726639267902826583426598550,
    0.104790010322250183839876322541518,
    0.022935322010529224963732008058970};

template <class F>
inline void gk15(const F& f, double a, double b, double& value, double& err) {
  const double c = 0.5 * (a + b);
  const double h = 0.5 * (b - a);
  const double f0 = f(c);
  double g7 = gauss_w[0] * f0;
  double k15 = kronrod_w[0] * f0;
  for (int i = 1; i < 4; ++i) {
    const double dx = h * gk_nodes[i];
    const double fi = f(c - dx) + f(c + dx);
    g7 += gauss_w[i] * fi;
    k15 += kronrod_w[i] * fi;
  }
  for (int i = 4; i < 8; ++i) {
    const double dx = h * gk_nodes[i];
    k15 += kronrod_w[i] * (f(c - dx) + f(c + dx));
  }
  value = k15 * h;
  err = std::abs((k15 - g7) * h);
}

struct QuadSegment {
  double a, b, value, error;
  int depth;
  bool operator<(const QuadSegment& other) const {
    if (error != other.error) return error < other.error;
    return a > other.a;  // deterministic tie-break
  }
};

}  // namespace detail

/// Adaptive Gauss-Kronrod integration of f on [a,b] to an absolute tolerance,
/// refining the worst segment first. Endpoints are never evaluated. Throws
/// QuadratureError when the depth or segment budget runs out short of the
/// tolerance.
template <class F>
inline double integrate(const F& f, double a, double b, const QuadPolicy& pol = {}) {
  if (std::isnan(a) || std::isnan(b) || !(a <= b))
    throw std::domain_error("integrate: invalid interval");
  if (a == b) return 0.0;

  std::priority_queue<detail::QuadSegment> heap;
  detail::QuadSegment seg{a, b, 0.0, 0.0, 0};
  detail::gk15(f, a, b, seg.value, seg.error);
  double active_value = seg.value;
  double active_error = seg.error;
  double parked_value = 0.0;  // segments at the depth cap, no longer refinable
  double parked_error = 0.0;
  heap.push(seg);

  while (active_error + parked_error > pol.abs_tol) {
    if (heap.empty() || static_cast<int>(heap.size()) >= pol.max_segments)
      throw QuadratureError("adaptive quadrature: segment budget exhausted");
    const detail::QuadSegment worst = heap.top();
    heap.pop();
    if (worst.depth >= pol.max_depth || worst.b - worst.a < 1e-300) {
      parked_value += worst.value;
      parked_error += worst.error;
      active_value -= worst.value;
      active_error -= worst.error;
      if (parked_error > pol.abs_tol)
        throw QuadratureError("adaptive quadrature: subdivision depth exhausted (err=" +
                              std::to_string(parked_error) + ")");
      continue;
    }
    const double mid = 0.5 * (worst.a + worst.b);
    detail::QuadSegment left{worst.a, mid, 0.0, 0.0, worst.depth + 1};
    detail::QuadSegment right{mid, worst.b, 0.0, 0.0, worst.depth + 1};
    detail::gk15(f, left.a, left.b, left.value, left.error);
    detail::gk15(f, right.a, right.b, right.value, right.error);
    active_value += left.value + right.value - worst.value;
    active_error += left.error + right.error - worst.error;
    heap.push(left);
    heap.push(right);
  }
  return active_value + parked_value;
}

}  // namespace fbmlab
