#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "fbmlab/approx.hpp"
#include "fbmlab/mc.hpp"
#include "fbmlab/rate.hpp"

namespace fbmlab {

/// 17 significant digits, round-half-even; the golden-file number format.
inline std::string fmt_sig17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.16e", v);
  return buf;
}

/// Writes content to path via a temp file in the same directory + rename.
inline void atomic_write(const std::string& path, const std::string& content) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("atomic_write: cannot open " + tmp);
    out << content;
    if (!out.good()) throw std::runtime_error("atomic_write: short write to " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw std::runtime_error("atomic_write: rename failed for " + path);
}

/// One row of the golden CSV (hurst, t, s_or_a, b_or_blank, kind, value,
/// tolerance); blank numeric fields parse as NaN.
struct GoldenRow {
  double hurst = 0.0;
  double t = 0.0;
  double s_or_a = 0.0;
  double b_or_blank = 0.0;
  std::string kind;
  double value = 0.0;
  double tolerance = 0.0;
};

inline std::vector<GoldenRow> load_golden(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_golden: cannot open " + path);
  std::vector<GoldenRow> rows;
  std::string line;
  std::getline(in, line);  // header
  const auto num = [](const std::string& field) {
    return field.empty() ? std::nan("") : std::stod(field);
  };
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    while (f.size() < 7) f.emplace_back();
    GoldenRow r;
    r.hurst = num(f[0]);
    r.t = num(f[1]);
    r.s_or_a = num(f[2]);
    r.b_or_blank = num(f[3]);
    r.kind = f[4];
    r.value = num(f[5]);
    r.tolerance = num(f[6]);
    rows.push_back(std::move(r));
  }
  return rows;
}

inline nlohmann::json to_json(const ConvergenceReport& rep) {
  return nlohmann::json{{"hurst", rep.hurst},     {"t", rep.t},
                        {"levels", rep.levels},   {"exact_l2", rep.exact_l2},
                        {"lower", rep.lower},     {"upper", rep.upper},
                        {"slope", rep.fitted_slope}};
}

inline std::string to_csv(const ConvergenceReport& rep) {
  std::string out = "m,exact_l2,lower,upper\n";
  for (size_t i = 0; i < rep.levels.size(); ++i)
    out += std::to_string(rep.levels[i]) + "," + fmt_sig17(rep.exact_l2[i]) + "," +
           fmt_sig17(rep.lower[i]) + "," + fmt_sig17(rep.upper[i]) + "\n";
  return out;
}

inline nlohmann::json to_json(const RateResult& res) {
  nlohmann::json j;
  if (std::isinf(res.value))
    j["value"] = "inf";
  else
    j["value"] = res.value;
  if (res.argmin)
    j["argmin"] = *res.argmin;
  else
    j["argmin"] = nullptr;
  j["method"] = to_string(res.method);
  return j;
}

inline nlohmann::json summary_json(const LadderEstimate& lad) {
  nlohmann::json j;
  j["slope"] = lad.slope;
  j["predicted"] = lad.predicted;
  j["ratio"] = lad.slope / lad.predicted;
  j["oracle_mode"] = lad.oracle_mode;
  j["n_paths"] = lad.n_paths;
  return j;
}

inline std::string to_csv(const LadderEstimate& lad) {
  std::string out = "eps,p_hat,ci_low,ci_high,n_paths\n";
  for (size_t i = 0; i < lad.epsilons.size(); ++i)
    out += fmt_sig17(lad.epsilons[i]) + "," + fmt_sig17(lad.p_hat[i]) + "," +
           fmt_sig17(lad.ci_low[i]) + "," + fmt_sig17(lad.ci_high[i]) + "," +
           std::to_string(lad.n_paths) + "\n";
  return out;
}

}  // namespace fbmlab
