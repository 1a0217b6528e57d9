#pragma once

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fbmlab/io.hpp"
#include "fbmlab/version.hpp"

namespace fbmlab {

/// Fully normalized run description; echoed verbatim into every report.
struct RunConfig {
  std::string command;
  double hurst = 0.75;
  double t = 1.0;
  std::vector<int> levels;
  std::vector<double> times;
  std::vector<double> eps;
  long long n_paths = 100000;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string format = "csv";
  int probes = 10;
  std::vector<double> lambdas;
  double p = 3.0;
  int r = 2;
  std::string event = "terminal";
  double a = 1.0;
  int level = 6;
  double radius = 0.0;
  std::vector<double> center;
  std::vector<double> point;
  double exceed_a = -1.0;
  double ball_radius = -1.0;
  bool oracle = false;
  bool two_sided = false;
  double lambda = 0.1;
  int ref_offset = 6;
  int threads = 1;
};

inline nlohmann::json to_json(const RunConfig& c) {
  return nlohmann::json{
      {"command", c.command},   {"hurst", c.hurst},          {"t", c.t},
      {"levels", c.levels},     {"times", c.times},          {"eps", c.eps},
      {"n_paths", c.n_paths},   {"seed", c.seed},            {"out_path", c.out_path},
      {"format", c.format},     {"probes", c.probes},        {"lambdas", c.lambdas},
      {"p", c.p},               {"r", c.r},                  {"event", c.event},
      {"a", c.a},               {"level", c.level},          {"radius", c.radius},
      {"center", c.center},     {"point", c.point},          {"exceed_a", c.exceed_a},
      {"ball_radius", c.ball_radius}, {"oracle", c.oracle},  {"two_sided", c.two_sided},
      {"lambda", c.lambda},     {"ref_offset", c.ref_offset}, {"threads", c.threads}};
}

inline RunConfig config_from_json(const nlohmann::json& j, RunConfig base = {}) {
  const nlohmann::json known = to_json(base);
  for (const auto& item : j.items())
    if (!known.contains(item.key()))
      throw std::invalid_argument("config: unknown key '" + item.key() + "'");
  RunConfig c = base;
  const auto get = [&j](const char* key, auto& into) {
    if (j.contains(key)) into = j.at(key).get<std::decay_t<decltype(into)>>();
  };
  get("command", c.command);
  get("hurst", c.hurst);
  get("t", c.t);
  get("levels", c.levels);
  get("times", c.times);
  get("eps", c.eps);
  get("n_paths", c.n_paths);
  get("seed", c.seed);
  get("out_path", c.out_path);
  get("format", c.format);
  get("probes", c.probes);
  get("lambdas", c.lambdas);
  get("p", c.p);
  get("r", c.r);
  get("event", c.event);
  get("a", c.a);
  get("level", c.level);
  get("radius", c.radius);
  get("center", c.center);
  get("point", c.point);
  get("exceed_a", c.exceed_a);
  get("ball_radius", c.ball_radius);
  get("oracle", c.oracle);
  get("two_sided", c.two_sided);
  get("lambda", c.lambda);
  get("ref_offset", c.ref_offset);
  get("threads", c.threads);
  return c;
}

namespace detail {

inline std::vector<int> parse_levels(const std::string& s) {
  std::vector<int> out;
  const auto dots = s.find("..");
  if (dots != std::string::npos) {
    const int a = std::stoi(s.substr(0, dots));
    const int b = std::stoi(s.substr(dots + 2));
    if (b < a) throw std::invalid_argument("levels: descending range " + s);
    for (int m = a; m <= b; ++m) out.push_back(m);
    return out;
  }
  std::stringstream ss(s);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stoi(cell));
  if (out.empty()) throw std::invalid_argument("levels: empty list");
  return out;
}

inline std::string report_head_csv(const RunConfig& cfg) {
  return std::string("# version: ") + version_string + "\n# config: " + to_json(cfg).dump() +
         "\n";
}

inline nlohmann::json report_head_json(const RunConfig& cfg) {
  nlohmann::json j;
  j["version"] = version_string;
  j["config"] = to_json(cfg);
  return j;
}

inline void emit(const RunConfig& cfg, const std::string& csv_payload,
                 nlohmann::json json_payload) {
  std::string body;
  if (cfg.format == "json") {
    nlohmann::json j = report_head_json(cfg);
    j.update(json_payload);
    body = j.dump(2) + "\n";
  } else {
    body = report_head_csv(cfg) + csv_payload;
  }
  if (cfg.out_path.empty())
    std::cout << body;
  else
    atomic_write(cfg.out_path, body);
}

inline int run_kernel_audit(const RunConfig& cfg) {
  const KernelSpec spec(cfg.hurst);
  std::string csv = "s,t,quadrature,analytic,residual\n";
  nlohmann::json rows = nlohmann::json::array();
  double max_resid = 0.0;
  for (int i = 1; i <= cfg.probes; ++i) {
    for (int j = i; j <= cfg.probes; ++j) {
      const double s = static_cast<double>(i) / cfg.probes;
      const double t = static_cast<double>(j) / cfg.probes;
      const double quad = cross_covariance_quadrature(spec, s, t);
      const double exact = fbm_covariance(cfg.hurst, s, t);
      const double resid = std::abs(quad - exact);
      max_resid = std::max(max_resid, resid);
      csv += fmt_sig17(s) + "," + fmt_sig17(t) + "," + fmt_sig17(quad) + "," + fmt_sig17(exact) +
             "," + fmt_sig17(resid) + "\n";
      rows.push_back({{"s", s}, {"t", t}, {"quadrature", quad}, {"analytic", exact},
                      {"residual", resid}});
    }
  }
  emit(cfg, csv, nlohmann::json{{"rows", rows}, {"max_residual", max_resid}});
  std::cerr << "kernel-audit H=" << cfg.hurst << " max |residual| = " << max_resid << "\n";
  return 0;
}

inline int run_converge(const RunConfig& cfg) {
  const KernelSpec spec(cfg.hurst);
  const ConvergenceReport rep = convergence_report(spec, cfg.t, cfg.levels);
  emit(cfg, to_csv(rep), nlohmann::json{{"report", to_json(rep)}});
  std::cerr << "converge H=" << cfg.hurst << " fitted slope = " << rep.fitted_slope << "\n";
  return 0;
}

inline int run_rate(const RunConfig& cfg) {
  const CovarianceSpec cov = build_covariance(cfg.hurst, cfg.times);
  RateResult res;
  if (!cfg.point.empty()) {
    res.value = rate_fd(cov, cfg.point);
    res.argmin = cfg.point;
    res.method = RateResult::Method::closed_form;
  } else if (cfg.ball_radius >= 0.0) {
    res.value = rate_ball_inf(cov, cfg.center, cfg.ball_radius);
    res.method = RateResult::Method::quadratic_solve;
  } else if (cfg.exceed_a >= 0.0) {
    res = rate_exceedance_inf(cov, cfg.exceed_a, !cfg.two_sided);
  } else {
    throw std::invalid_argument("rate: give one of --point, --ball-radius, --exceed");
  }
  std::string csv = "value,method\n" + fmt_sig17(res.value) + "," + to_string(res.method) + "\n";
  emit(cfg, csv, nlohmann::json{{"result", to_json(res)}});
  return 0;
}

inline int run_tail_bound(const RunConfig& cfg) {
  std::string csv = "m,lambda,N,q,theta,gamma,alpha,bound\n";
  nlohmann::json rows = nlohmann::json::array();
  for (int m : cfg.levels) {
    for (double lam : cfg.lambdas) {
      const auto [params, bound] =
          optimize_tail_bound(m, lam, CapacityIndex{cfg.p, cfg.r}, cfg.hurst);
      csv += std::to_string(m) + "," + fmt_sig17(lam) + "," + std::to_string(params.n_chaos) +
             "," + fmt_sig17(params.q) + "," + fmt_sig17(params.theta) + "," +
             fmt_sig17(params.gamma) + "," + fmt_sig17(params.alpha) + "," + fmt_sig17(bound) +
             "\n";
      rows.push_back({{"m", m},
                      {"lambda", lam},
                      {"N", params.n_chaos},
                      {"q", params.q},
                      {"theta", params.theta},
                      {"gamma", params.gamma},
                      {"alpha", params.alpha},
                      {"bound", bound}});
    }
  }
  emit(cfg, csv, nlohmann::json{{"rows", rows}});
  return 0;
}

inline EventSpec event_from_config(const RunConfig& cfg) {
  EventSpec ev;
  ev.hurst = cfg.hurst;
  ev.level = cfg.level;
  ev.a = cfg.a;
  ev.t = cfg.t;
  if (cfg.event == "terminal")
    ev.kind = EventSpec::Kind::terminal_exceed;
  else if (cfg.event == "sup")
    ev.kind = EventSpec::Kind::sup_exceed;
  else if (cfg.event == "ball") {
    ev.kind = EventSpec::Kind::sigma_ball_complement;
    ev.center = cfg.center;
    ev.radius = cfg.radius;
  } else {
    throw std::invalid_argument("mc-ldp: event must be terminal, sup or ball");
  }
  return ev;
}

inline int run_mc_ldp(const RunConfig& cfg) {
  const EventSpec ev = event_from_config(cfg);
  const LadderEstimate lad = ladder(ev, cfg.eps, cfg.n_paths, SeededStream{cfg.seed, 0},
                                    cfg.oracle, cfg.threads);
  nlohmann::json j = {{"summary", summary_json(lad)},
                      {"rungs",
                       {{"eps", lad.epsilons},
                        {"p_hat", lad.p_hat},
                        {"ci_low", lad.ci_low},
                        {"ci_high", lad.ci_high}}}};
  emit(cfg, to_csv(lad), j);
  std::cerr << "mc-ldp slope = " << lad.slope << " predicted = " << lad.predicted << "\n";
  return 0;
}

inline int run_approx_gap(const RunConfig& cfg) {
  if (cfg.eps.size() != 1) throw std::invalid_argument("approx-gap: give exactly one --eps");
  const GapResult res = approximation_gap(cfg.hurst, cfg.level, cfg.eps[0], cfg.lambda,
                                          cfg.n_paths, SeededStream{cfg.seed, 0},
                                          cfg.ref_offset, nullptr, cfg.threads);
  std::string csv = "m,ref_level,eps,lambda,gap_freq,capacity_bound,prob_bound\n" +
                    std::to_string(res.level) + "," + std::to_string(res.ref_level) + "," +
                    fmt_sig17(cfg.eps[0]) + "," + fmt_sig17(cfg.lambda) + "," +
                    fmt_sig17(res.gap_freq) + "," + fmt_sig17(res.capacity_bound) + "," +
                    fmt_sig17(res.prob_bound) + "\n";
  emit(cfg, csv,
       nlohmann::json{{"gap_freq", res.gap_freq},
                      {"capacity_bound", res.capacity_bound},
                      {"prob_bound", res.prob_bound},
                      {"m", res.level},
                      {"ref_level", res.ref_level}});
  return 0;
}

}  // namespace detail

/// Dispatches a parsed config; returns the process exit code (0 success,
/// 1 numeric failure, 2 usage).
inline int run(const RunConfig& cfg) {
  try {
    if (cfg.command == "kernel-audit") return detail::run_kernel_audit(cfg);
    if (cfg.command == "converge") return detail::run_converge(cfg);
    if (cfg.command == "rate") return detail::run_rate(cfg);
    if (cfg.command == "tail-bound") return detail::run_tail_bound(cfg);
    if (cfg.command == "mc-ldp") return detail::run_mc_ldp(cfg);
    if (cfg.command == "approx-gap") return detail::run_approx_gap(cfg);
    std::cerr << "unknown command: " << cfg.command << "\n";
    return 2;
  } catch (const QuadratureError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 1;
  } catch (const InfeasibleParams& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 1;
  } catch (const CovarianceError& e) {
    std::cerr << "numeric failure: " << e.what() << "\n";
    return 1;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::domain_error& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }
}

/// Parses argv (plus an optional --config JSON file whose values the flags
/// override), normalizes, and validates domain gates.
inline RunConfig parse_config(int argc, const char* const* argv) {
  RunConfig cfg;

  // First pass: locate --config and use it as the base layer.
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--config") {
      std::ifstream in(argv[i + 1]);
      if (!in) throw std::invalid_argument(std::string("cannot open config ") + argv[i + 1]);
      nlohmann::json j;
      in >> j;
      cfg = config_from_json(j);
    }
  }

  CLI::App app{"fractional Brownian motion laboratory"};
  app.require_subcommand(1);
  std::string config_path, levels_str;

  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (flags override it)");
    sub->add_option("--hurst", cfg.hurst, "Hurst parameter in [0.5, 1)");
    sub->add_option("--out", cfg.out_path, "report path (stdout when empty)");
    sub->add_option("--format", cfg.format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", cfg.seed, "RNG seed");
    sub->add_option("--threads", cfg.threads, "worker threads");
  };

  CLI::App* audit = app.add_subcommand("kernel-audit", "covariance-identity residual grid");
  add_common(audit);
  audit->add_option("--probes", cfg.probes, "probe grid size per axis");

  CLI::App* conv = app.add_subcommand("converge", "exact L2 ladder differences and bounds");
  add_common(conv);
  conv->add_option("--levels", levels_str, "levels, e.g. 1..8 or 1,2,4");
  conv->add_option("--t", cfg.t, "terminal time in (0,1]");

  CLI::App* rate_cmd = app.add_subcommand("rate", "finite-dimensional rate function queries");
  add_common(rate_cmd);
  rate_cmd->add_option("--times", cfg.times, "grid times")->delimiter(',');
  rate_cmd->add_option("--point", cfg.point, "point query")->delimiter(',');
  rate_cmd->add_option("--ball-center", cfg.center, "Sigma-ball center")->delimiter(',');
  rate_cmd->add_option("--ball-radius", cfg.ball_radius, "Sigma-ball radius");
  rate_cmd->add_option("--exceed", cfg.exceed_a, "sup-norm exceedance threshold");
  rate_cmd->add_flag("--two-sided", cfg.two_sided, "two-sided exceedance");

  CLI::App* tail = app.add_subcommand("tail-bound", "optimized capacity tail bounds");
  add_common(tail);
  tail->add_option("--levels", levels_str, "ladder levels m");
  tail->add_option("--lambdas", cfg.lambdas, "thresholds")->delimiter(',');
  tail->add_option("--p", cfg.p, "capacity index p");
  tail->add_option("--r", cfg.r, "capacity index r");

  CLI::App* mc = app.add_subcommand("mc-ldp", "Monte Carlo LDP slope ladder");
  add_common(mc);
  mc->add_option("--event", cfg.event, "terminal, sup or ball");
  mc->add_option("--a", cfg.a, "exceedance threshold");
  mc->add_option("--t", cfg.t, "terminal time");
  mc->add_option("--level", cfg.level, "dyadic level for path events");
  mc->add_option("--eps", cfg.eps, "decreasing epsilon ladder")->delimiter(',');
  mc->add_option("--n-paths", cfg.n_paths, "paths per rung");
  mc->add_option("--center", cfg.center, "ball center")->delimiter(',');
  mc->add_option("--radius", cfg.radius, "ball radius");
  mc->add_flag("--oracle", cfg.oracle, "use analytic tails instead of sampling");

  CLI::App* gap = app.add_subcommand("approx-gap", "exponential-approximation diagnostic");
  add_common(gap);
  gap->add_option("--level", cfg.level, "coarse level m");
  gap->add_option("--eps", cfg.eps, "scale epsilon")->delimiter(',');
  gap->add_option("--lambda", cfg.lambda, "gap threshold");
  gap->add_option("--n-paths", cfg.n_paths, "sampled paths");
  gap->add_option("--ref-offset", cfg.ref_offset, "reference level offset M - m");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    throw;
  }
  cfg.command = app.get_subcommands().front()->get_name();
  if (!levels_str.empty()) cfg.levels = detail::parse_levels(levels_str);

  if (const char* dir = std::getenv("FBMLAB_OUT_DIR");
      dir && !cfg.out_path.empty() && cfg.out_path.front() != '/')
    cfg.out_path = std::string(dir) + "/" + cfg.out_path;
  if (const char* th = std::getenv("FBMLAB_THREADS"); th && *th) cfg.threads = std::atoi(th);

  if (!(cfg.hurst >= 0.5 && cfg.hurst < 1.0))
    throw CLI::ValidationError("--hurst", "must be in [0.5, 1)");
  if (!(cfg.t > 0.0 && cfg.t <= 1.0)) throw CLI::ValidationError("--t", "must be in (0,1]");
  if (cfg.threads < 1) throw CLI::ValidationError("--threads", "must be >= 1");
  return cfg;
}

/// main() body: parse, run, map errors to exit codes.
inline int cli_main(int argc, const char* const* argv) {
  try {
    const RunConfig cfg = parse_config(argc, argv);
    return run(cfg);
  } catch (const CLI::CallForHelp&) {
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace fbmlab
