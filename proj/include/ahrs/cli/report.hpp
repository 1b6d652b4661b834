#ifndef AHRS_CLI_REPORT_HPP_
#define AHRS_CLI_REPORT_HPP_

#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>

#include <json.hpp>

#include "ahrs/cli/csv.hpp"
#include "ahrs/error.hpp"
#include "ahrs/riccati.hpp"

namespace ahrs::cli {

struct LoadedGains {
  Mat6 K = Mat6::Zero();
  std::optional<riccati::Rincf2Params> rincf2;
};

/// JSON gain report: K (rows), params a1..d3, p1, p2, residual, iters.
inline nlohmann::json tune_to_json(const riccati::TuneReport& r) {
  nlohmann::json j;
  j["K"] = nlohmann::json::array();
  for (int i = 0; i < 6; ++i) {
    auto row = nlohmann::json::array();
    for (int c = 0; c < 6; ++c) row.push_back(r.K(i, c));
    j["K"].push_back(row);
  }
  nlohmann::json p;
  const char* names = "abcd";
  const Vec3* blocks[] = {&r.params.a, &r.params.b, &r.params.c, &r.params.d};
  for (int b = 0; b < 4; ++b)
    for (int i = 0; i < 3; ++i) p[std::string(1, names[b]) + std::to_string(i + 1)] = (*blocks[b])[i];
  j["params"] = p;
  if (!r.rincf2.empty()) {
    j["p1"] = r.rincf2.front().p1;
    j["p2"] = r.rincf2.front().p2;
    j["omega_max"] = r.rincf2.front().omega_max;
    auto all = nlohmann::json::array();
    for (const auto& q : r.rincf2) all.push_back({{"omega_max", q.omega_max}, {"p1", q.p1}, {"p2", q.p2}});
    j["rincf2"] = all;
  } else {
    j["p1"] = nullptr;
    j["p2"] = nullptr;
  }
  j["residual"] = r.residual;
  j["iters"] = r.iterations;
  return j;
}

inline void write_tune_text(std::ostream& out, const riccati::TuneReport& r) {
  char buf[64];
  out << "K =\n";
  for (int i = 0; i < 6; ++i) {
    for (int c = 0; c < 6; ++c) {
      std::snprintf(buf, sizeof buf, "%13.5e", r.K(i, c));
      out << buf;
    }
    out << '\n';
  }
  out << "structured gains (observer form, x1e-3):\n";
  const char* names = "abcd";
  const Vec3* blocks[] = {&r.params.a, &r.params.b, &r.params.c, &r.params.d};
  for (int b = 0; b < 4; ++b) {
    out << "  " << names[b] << " =";
    for (int i = 0; i < 3; ++i) {
      std::snprintf(buf, sizeof buf, " %9.5f", (*blocks[b])[i] * 1e3);
      out << buf;
    }
    out << '\n';
  }
  std::snprintf(buf, sizeof buf, "  off-diagonal residual %.3e\n", r.params.offdiag_residual);
  out << buf;
  for (const auto& p : r.rincf2) {
    std::snprintf(buf, sizeof buf, "omega_max %.6g: p1 = %.6e  p2 = %.6e\n", p.omega_max, p.p1, p.p2);
    out << buf;
  }
  std::snprintf(buf, sizeof buf, "residual %.3e after %d iterations\n", r.residual, r.iterations);
  out << buf;
}

inline LoadedGains load_gains_json(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error(ErrorKind::InvalidConfig, "cannot open gains file '" + path + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(f);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, "gains file '" + path + "': " + e.what());
  }
  LoadedGains g;
  try {
    const auto& K = j.at("K");
    if (K.size() != 6) throw Error(ErrorKind::Parse, "K must have 6 rows");
    for (int i = 0; i < 6; ++i) {
      if (K[static_cast<std::size_t>(i)].size() != 6) throw Error(ErrorKind::Parse, "K rows must have 6 entries");
      for (int c = 0; c < 6; ++c) g.K(i, c) = K[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
    }
    if (j.contains("p1") && j.contains("p2") && !j["p1"].is_null() && !j["p2"].is_null())
      g.rincf2 = riccati::Rincf2Params{j["p1"].get<double>(), j["p2"].get<double>(), j.value("omega_max", 1.0)};
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::Parse, "gains file '" + path + "': " + e.what());
  }
  return g;
}

}  // namespace ahrs::cli

#endif  // AHRS_CLI_REPORT_HPP_
