#ifndef AHRS_CLI_CSV_HPP_
#define AHRS_CLI_CSV_HPP_

#include <array>
#include <charconv>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "ahrs/cli/config.hpp"
#include "ahrs/error.hpp"
#include "ahrs/models.hpp"
#include "ahrs/sim.hpp"

namespace ahrs::cli {

inline constexpr std::string_view kLogHeader = "t,wx,wy,wz,ax,ay,az,mx,my,mz";
inline constexpr std::string_view kTruthHeader = "qw,qx,qy,qz,bwx,bwy,bwz";

struct LogTruth {
  Quat q;
  Vec3 bias = Vec3::Zero();
};

struct Log {
  std::vector<ImuSample> samples;
  std::vector<LogTruth> truth;  // empty, or one per sample

  bool has_truth() const { return !samples.empty() && truth.size() == samples.size(); }
};

/// Shortest decimal string that round-trips to the same double.
inline std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  CsvWriter& header(std::string_view h) {
    out_ << h << '\n';
    return *this;
  }

  CsvWriter& field(double v) {
    sep();
    out_ << format_double(v);
    return *this;
  }

  template <class Derived>
  CsvWriter& fields(const Eigen::MatrixBase<Derived>& m) {
    for (Eigen::Index i = 0; i < m.size(); ++i) field(m.derived().data()[i]);
    return *this;
  }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }

  std::ostream& out_;
  bool first_ = true;
};

inline void write_log(std::ostream& out, const Log& log) {
  CsvWriter w(out);
  if (log.has_truth()) w.header(std::string(kLogHeader) + "," + std::string(kTruthHeader));
  else w.header(kLogHeader);
  for (std::size_t i = 0; i < log.samples.size(); ++i) {
    const ImuSample& s = log.samples[i];
    w.field(s.t).fields(s.omega_m).fields(s.y_a).fields(s.y_b);
    if (log.has_truth()) {
      const LogTruth& tr = log.truth[i];
      w.field(tr.q.a).field(tr.q.b).field(tr.q.c).field(tr.q.d).fields(tr.bias);
    }
    w.end_row();
  }
}

inline Log log_from_sim(const sim::SimResult& r) {
  Log log;
  log.samples = r.samples;
  log.truth.reserve(r.truth.size());
  for (const auto& t : r.truth) log.truth.push_back({t.q_true, t.bias_true});
  return log;
}

/**
 * Reads a log. The header must be exactly the base schema, optionally
 * followed by the truth columns. Rows must be complete and t strictly
 * increasing; errors carry the 1-based line number.
 */
inline Log read_log(std::istream& in) {
  std::string line;
  int line_no = 1;
  if (!std::getline(in, line)) detail::parse_fail("empty log, header expected", line_no);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::string full = std::string(kLogHeader) + "," + std::string(kTruthHeader);
  bool truth = false;
  if (line == full) truth = true;
  else if (line != kLogHeader) detail::parse_fail("unexpected header '" + line + "'", line_no);
  const std::size_t ncols = truth ? 17 : 10;

  Log log;
  std::vector<double> v;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (detail::trim(line).empty()) continue;
    v.clear();
    std::size_t start = 0;
    while (true) {
      const auto pos = line.find(',', start);
      const std::string_view cell(line.data() + start, (pos == std::string::npos ? line.size() : pos) - start);
      const char* first = cell.data();
      const char* last = cell.data() + cell.size();
      double x = 0.0;
      const auto [ptr, ec] = std::from_chars(first, last, x);
      if (cell.empty() || ec != std::errc() || ptr != last)
        detail::parse_fail("malformed number '" + std::string(cell) + "'", line_no);
      v.push_back(x);
      if (pos == std::string::npos) break;
      start = pos + 1;
    }
    if (v.size() != ncols)
      detail::parse_fail("expected " + std::to_string(ncols) + " columns, got " + std::to_string(v.size()), line_no);
    ImuSample s;
    s.t = v[0];
    s.omega_m = {v[1], v[2], v[3]};
    s.y_a = {v[4], v[5], v[6]};
    s.y_b = {v[7], v[8], v[9]};
    if (!log.samples.empty() && !(s.t > log.samples.back().t))
      detail::parse_fail("time is not increasing (t=" + format_double(s.t) + ")", line_no);
    log.samples.push_back(s);
    if (truth) log.truth.push_back({Quat{v[10], v[11], v[12], v[13]}, Vec3(v[14], v[15], v[16])});
  }
  return log;
}

}  // namespace ahrs::cli

#endif  // AHRS_CLI_CSV_HPP_
