#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>
#include <vector>

#include "fbmlab/gauss.hpp"
#include "fbmlab/malliavin.hpp"
#include "fbmlab/rate.hpp"

namespace fbmlab {

/// Upper Gaussian tail P(Z > z), stable far into the tail.
inline double normal_tail(double z) { return 0.5 * std::erfc(z / 1.4142135623730951); }

/// log P(Z > z); switches to the asymptotic expansion where erfc underflows.
inline double normal_log_tail(double z) {
  if (z < 12.0) return std::log(normal_tail(z));
  const double z2 = z * z;
  const double corr =
      1.0 - 1.0 / z2 + 3.0 / (z2 * z2) - 15.0 / (z2 * z2 * z2) + 105.0 / (z2 * z2 * z2 * z2);
  return -0.5 * z2 - 0.91893853320467274 - std::log(z) + std::log(corr);
}

/// 95% Wilson score interval for a binomial proportion.
inline std::pair<double, double> wilson_interval(long long hits, long long n) {
  const double z = 1.959963984540054;
  const double nn = static_cast<double>(n);
  const double p = static_cast<double>(hits) / nn;
  const double denom = 1.0 + z * z / nn;
  const double center = (p + z * z / (2.0 * nn)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / nn + z * z / (4.0 * nn * nn)) / denom;
  return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

/// One-sided 95% Clopper-Pearson upper bound for zero observed hits.
inline double clopper_pearson_upper_zero(long long n) {
  return 1.0 - std::pow(0.05, 1.0 / static_cast<double>(n));
}

/// A scaled-path event whose probability decay the LDP predicts.
struct EventSpec {
  enum class Kind { terminal_exceed, sup_exceed, sigma_ball_complement };

  Kind kind = Kind::terminal_exceed;
  double hurst = 0.5;
  int level = 0;                // dyadic grid level for path events
  double a = 1.0;               // exceedance threshold
  double t = 1.0;               // terminal time for terminal_exceed
  std::vector<double> center;   // ball-complement center on the level-m grid
  double radius = 0.0;
};

struct Estimate {
  double p_hat = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  double log_p = std::numeric_limits<double>::quiet_NaN();  // finite whenever usable
  long long n = 0;
  long long hits = 0;
  bool degenerate = false;  // zero hits: ci_high is the Clopper-Pearson bound
};

namespace detail {

inline Estimate finish_estimate(long long hits, long long n) {
  Estimate e;
  e.n = n;
  e.hits = hits;
  e.p_hat = static_cast<double>(hits) / static_cast<double>(n);
  if (hits == 0) {
    e.degenerate = true;
    e.ci_low = 0.0;
    e.ci_high = clopper_pearson_upper_zero(n);
  } else {
    const auto ci = wilson_interval(hits, n);
    e.ci_low = ci.first;
    e.ci_high = ci.second;
    e.log_p = std::log(e.p_hat);
  }
  return e;
}

inline std::vector<double> dyadic_times(int m) {
  const int n = 1 << m;
  std::vector<double> times(static_cast<size_t>(n));
  const double h = std::ldexp(1.0, -m);
  for (int k = 1; k <= n; ++k) times[static_cast<size_t>(k - 1)] = k * h;
  return times;
}

// Counts hits over chunked sub-streams; chunk c draws from
// (seed, stream_id * 2^20 + c), so totals do not depend on thread schedule.
template <class PathHit>
inline long long count_hits(long long n_paths, SeededStream stream, int n_threads,
                            const PathHit& hit_for_chunk) {
  constexpr long long kChunk = 1 << 16;
  const long long n_chunks = (n_paths + kChunk - 1) / kChunk;
  if (n_chunks >= (1 << 20)) throw std::invalid_argument("count_hits: too many paths");
  std::vector<long long> per_chunk(static_cast<size_t>(n_chunks), 0);
  const auto run_range = [&](long long c0, long long c1) {
    for (long long c = c0; c < c1; ++c) {
      const long long lo = c * kChunk;
      const long long count = std::min(kChunk, n_paths - lo);
      GaussianStream gs(SeededStream{stream.seed, (stream.stream_id << 20) + static_cast<std::uint64_t>(c)});
      per_chunk[static_cast<size_t>(c)] = hit_for_chunk(gs, count);
    }
  };
  const int threads = std::max(1, std::min<int>(n_threads, static_cast<int>(n_chunks)));
  if (threads == 1) {
    run_range(0, n_chunks);
  } else {
    std::vector<std::thread> pool;
    const long long per = (n_chunks + threads - 1) / threads;
    for (int t = 0; t < threads; ++t) {
      const long long c0 = t * per;
      const long long c1 = std::min<long long>(n_chunks, c0 + per);
      if (c0 < c1) pool.emplace_back(run_range, c0, c1);
    }
    for (auto& th : pool) th.join();
  }
  long long total = 0;
  for (long long v : per_chunk) total += v;
  return total;
}

}  // namespace detail

/// Monte Carlo estimate of P(scaled event) from n_paths exact Gaussian
/// samples, with a 95% Wilson interval (Clopper-Pearson upper bound when no
/// hits occur).
inline Estimate estimate_event(const EventSpec& event, double eps, long long n_paths,
                               SeededStream stream, int n_threads = 1) {
  if (!(eps > 0.0)) throw std::domain_error("estimate_event: need eps > 0");
  if (n_paths < 1000) throw std::domain_error("estimate_event: need n_paths >= 1000");

  long long hits = 0;
  switch (event.kind) {
    case EventSpec::Kind::terminal_exceed: {
      if (!(event.a > 0.0)) throw std::domain_error("estimate_event: need a > 0");
      const double sd = eps * std::pow(event.t, event.hurst);
      const double threshold = event.a;
      hits = detail::count_hits(n_paths, stream, n_threads,
                                [sd, threshold](GaussianStream& gs, long long count) {
                                  long long h = 0;
                                  for (long long i = 0; i < count; ++i)
                                    if (sd * gs.next() > threshold) ++h;
                                  return h;
                                });
      break;
    }
    case EventSpec::Kind::sup_exceed: {
      if (!(event.a > 0.0)) throw std::domain_error("estimate_event: need a > 0");
      const double threshold = event.a / eps;
      const int n = 1 << event.level;
      if (event.hurst == 0.5) {
        const double sd = std::sqrt(std::ldexp(1.0, -event.level));
        hits = detail::count_hits(n_paths, stream, n_threads,
                                  [sd, n, threshold](GaussianStream& gs, long long count) {
                                    long long h = 0;
                                    for (long long i = 0; i < count; ++i) {
                                      double cum = 0.0, peak = 0.0;
                                      for (int k = 0; k < n; ++k) {
                                        cum += sd * gs.next();
                                        peak = std::max(peak, cum);
                                      }
                                      if (peak >= threshold) ++h;
                                    }
                                    return h;
                                  });
      } else {
        const CovarianceSpec cov = build_covariance(event.hurst, detail::dyadic_times(event.level));
        hits = detail::count_hits(n_paths, stream, n_threads,
                                  [&cov, threshold](GaussianStream& gs, long long count) {
                                    long long h = 0;
                                    for (long long i = 0; i < count; ++i) {
                                      const std::vector<double> x = sample_gaussian(cov, gs);
                                      double peak = 0.0;
                                      for (double v : x) peak = std::max(peak, v);
                                      if (peak >= threshold) ++h;
                                    }
                                    return h;
                                  });
      }
      break;
    }
    case EventSpec::Kind::sigma_ball_complement: {
      if (!(event.radius >= 0.0)) throw std::domain_error("estimate_event: need radius >= 0");
      const CovarianceSpec cov = build_covariance(event.hurst, detail::dyadic_times(event.level));
      if (static_cast<int>(event.center.size()) != cov.dim())
        throw std::invalid_argument("estimate_event: center dimension mismatch");
      hits = detail::count_hits(
          n_paths, stream, n_threads, [&](GaussianStream& gs, long long count) {
            long long h = 0;
            std::vector<double> w(event.center.size());
            for (long long i = 0; i < count; ++i) {
              const std::vector<double> x = sample_gaussian(cov, gs);
              for (size_t j = 0; j < w.size(); ++j) w[j] = eps * x[j] - event.center[j];
              if (sigma_norm(cov, w) >= event.radius) ++h;
            }
            return h;
          });
      break;
    }
  }
  return detail::finish_estimate(hits, n_paths);
}

/// Closed-form tail substitute for p_hat ("oracle mode"): exact Gaussian tails
/// for terminal exceedances and the reflection principle for the Brownian sup.
inline Estimate oracle_estimate(const EventSpec& event, double eps) {
  Estimate e;
  if (event.kind == EventSpec::Kind::terminal_exceed) {
    e.log_p = normal_log_tail(event.a / (eps * std::pow(event.t, event.hurst)));
  } else if (event.kind == EventSpec::Kind::sup_exceed && event.hurst == 0.5) {
    e.log_p = std::min(0.0, 0.6931471805599453 + normal_log_tail(event.a / eps));
  } else {
    throw std::invalid_argument("oracle_estimate: no closed form for this event");
  }
  e.p_hat = std::exp(e.log_p);  // may underflow deep in the tail; log_p stays exact
  e.ci_low = e.ci_high = e.p_hat;
  return e;
}

/// The predicted LDP decay -inf I over the event set (probability convention,
/// p = 1).
inline double predicted_rate(const EventSpec& event) {
  switch (event.kind) {
    case EventSpec::Kind::terminal_exceed:
      return -event.a * event.a / (2.0 * std::pow(event.t, 2.0 * event.hurst));
    case EventSpec::Kind::sup_exceed: {
      const CovarianceSpec cov = build_covariance(event.hurst, detail::dyadic_times(event.level));
      return -rate_exceedance_inf(cov, event.a, true).value;
    }
    default: {
      const CovarianceSpec cov = build_covariance(event.hurst, detail::dyadic_times(event.level));
      const double slack = std::max(event.radius - sigma_norm(cov, event.center), 0.0);
      return -0.5 * slack * slack;
    }
  }
}

struct LadderEstimate {
  std::vector<double> epsilons;
  std::vector<double> p_hat;
  std::vector<double> ci_low;
  std::vector<double> ci_high;
  long long n_paths = 0;
  double slope = std::numeric_limits<double>::quiet_NaN();
  double predicted = 0.0;
  int finite_count = 0;
  bool oracle_mode = false;
};

/// Runs estimate_event down a decreasing epsilon ladder and fits the slope of
/// log p_hat against eps^{-2} (weights: inverse variance of log p_hat via the
/// delta method, (p_hat / ci_width)^2). slope is NaN with fewer than 3 finite
/// estimates.
inline LadderEstimate ladder(const EventSpec& event, const std::vector<double>& epsilons,
                             long long n_paths, SeededStream stream, bool oracle_mode = false,
                             int n_threads = 1) {
  if (epsilons.empty()) throw std::invalid_argument("ladder: empty epsilon ladder");
  for (size_t j = 0; j < epsilons.size(); ++j) {
    if (!(epsilons[j] > 0.0)) throw std::domain_error("ladder: epsilons must be positive");
    if (j > 0 && !(epsilons[j] < epsilons[j - 1]))
      throw std::domain_error("ladder: epsilons must decrease");
  }
  LadderEstimate out;
  out.epsilons = epsilons;
  out.n_paths = oracle_mode ? 0 : n_paths;
  out.oracle_mode = oracle_mode;
  out.predicted = predicted_rate(event);

  double sw = 0.0, swx = 0.0, swy = 0.0, swxx = 0.0, swxy = 0.0;
  for (size_t j = 0; j < epsilons.size(); ++j) {
    const Estimate e =
        oracle_mode ? oracle_estimate(event, epsilons[j])
                    : estimate_event(event, epsilons[j], n_paths,
                                     SeededStream{stream.seed, stream.stream_id + j}, n_threads);
    out.p_hat.push_back(e.p_hat);
    out.ci_low.push_back(e.ci_low);
    out.ci_high.push_back(e.ci_high);
    if (!std::isfinite(e.log_p)) continue;
    const double x = 1.0 / (epsilons[j] * epsilons[j]);
    const double y = e.log_p;
    const double width = e.ci_high - e.ci_low;
    const double w = width > 0.0 ? (e.p_hat / width) * (e.p_hat / width) : 1.0;
    sw += w;
    swx += w * x;
    swy += w * y;
    swxx += w * x * x;
    swxy += w * x * y;
    ++out.finite_count;
  }
  if (out.finite_count >= 3)
    out.slope = (sw * swxy - swx * swy) / (sw * swxx - swx * swx);
  return out;
}

struct GapResult {
  double gap_freq = 0.0;       // frequency of ||X^{eps,(m)} - X^{eps,(M)}|| > lambda
  double capacity_bound = 0.0; // per-level capacity bounds summed over m..M-1
  double prob_bound = 0.0;     // min(1, capacity_bound^p): the (p,r)->(1,0) chain
  int level = 0;
  int ref_level = 0;
};

namespace detail {

inline TailBoundParams default_gap_params(double hurst) {
  TailBoundParams p;
  p.n_chaos = 2;
  p.q = 1.0 / (hurst - 0.5) + 2.0;
  const double theta_cap = std::min(p.q * hurst - p.q / 4.0 - 1.0, p.q / 2.0 - 1.0);
  p.theta = 0.25 * theta_cap;
  p.gamma = p.q;
  p.alpha = 0.5 * (hurst - (1.0 + p.theta) / p.q - 0.25);
  p.idx = CapacityIndex{3.0, 0};
  p.hurst = hurst;
  return validate_tail_params(p);
}

}  // namespace detail

/// Samples level-M reference paths (M = m + ref_offset), measures the sup-norm
/// gap between the level-m and level-M interpolants of the scaled path, and
/// reports the exceedance frequency next to the summed capacity bound.
inline GapResult approximation_gap(double hurst, int m, double eps, double lambda,
                                   long long n_paths, SeededStream stream, int ref_offset = 6,
                                   const TailBoundParams* params = nullptr, int n_threads = 1) {
  if (m < 1) throw std::domain_error("approximation_gap: need m >= 1");
  if (!(eps > 0.0 && lambda > 0.0))
    throw std::domain_error("approximation_gap: need eps, lambda > 0");
  const int big_m = m + ref_offset;
  if (big_m > 14) throw std::domain_error("approximation_gap: reference level out of range");
  const int n = 1 << big_m;
  const int stride = 1 << ref_offset;
  const double threshold = lambda / eps;

  const auto gap_of_path = [&](const std::vector<double>& v) {
    // v holds the level-M knot values with the origin prepended
    double gap = 0.0;
    for (int i = 0; i < (1 << m); ++i) {
      const double va = v[static_cast<size_t>(i * stride)];
      const double vb = v[static_cast<size_t>((i + 1) * stride)];
      for (int j = 1; j < stride; ++j) {
        const double interp = va + (vb - va) * j / stride;
        gap = std::max(gap, std::abs(interp - v[static_cast<size_t>(i * stride + j)]));
      }
    }
    return gap;
  };

  long long hits = 0;
  if (hurst == 0.5) {
    const double sd = std::sqrt(std::ldexp(1.0, -big_m));
    hits = detail::count_hits(n_paths, stream, n_threads,
                              [&](GaussianStream& gs, long long count) {
                                long long h = 0;
                                std::vector<double> v(static_cast<size_t>(n) + 1);
                                for (long long i = 0; i < count; ++i) {
                                  v[0] = 0.0;
                                  for (int k = 1; k <= n; ++k)
                                    v[static_cast<size_t>(k)] =
                                        v[static_cast<size_t>(k - 1)] + sd * gs.next();
                                  if (gap_of_path(v) > threshold) ++h;
                                }
                                return h;
                              });
  } else {
    const CovarianceSpec cov = build_covariance(hurst, detail::dyadic_times(big_m));
    hits = detail::count_hits(n_paths, stream, n_threads,
                              [&](GaussianStream& gs, long long count) {
                                long long h = 0;
                                std::vector<double> v(static_cast<size_t>(n) + 1);
                                for (long long i = 0; i < count; ++i) {
                                  const std::vector<double> x = sample_gaussian(cov, gs);
                                  v[0] = 0.0;
                                  std::copy(x.begin(), x.end(), v.begin() + 1);
                                  if (gap_of_path(v) > threshold) ++h;
                                }
                                return h;
                              });
  }

  GapResult res;
  res.gap_freq = static_cast<double>(hits) / static_cast<double>(n_paths);
  res.level = m;
  res.ref_level = big_m;
  if (hurst == 0.5 && !params) {
    // the tail-bound constants need q > (H-1/2)^{-1}; no finite bound at H=1/2
    res.capacity_bound = std::numeric_limits<double>::infinity();
    res.prob_bound = 1.0;
    return res;
  }
  const TailBoundParams tuned = params ? *params : detail::default_gap_params(hurst);
  double total = 0.0;
  for (int k = m; k < big_m; ++k) {
    const double lam_k =
        lambda * tuned.derived.c_alpha * std::exp2(-(k - m) * tuned.alpha) / eps;
    total += capacity_tail_bound(k, lam_k, tuned);
  }
  res.capacity_bound = total;
  res.prob_bound = std::min(1.0, std::pow(total, tuned.idx.p));
  return res;
}

}  // namespace fbmlab
