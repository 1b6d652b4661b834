#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include "ahrs/cli/commands.hpp"
#include "ahrs/cli/config.hpp"
#include "ahrs/cli/csv.hpp"
#include "ahrs/cli/report.hpp"
#include "ahrs/cli/selftest.hpp"

using namespace ahrs;
using namespace ahrs::cli;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::InvalidConfig;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

class Workdir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("ahrs_cli_") + info->name() + "_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path path(const std::string& name) const { return dir_ / name; }

  int ahrs(const std::string& args, const std::string& out = "stdout.txt") const {
    const std::string cmd = std::string(AHRS_CLI_PATH) + " " + args + " > " + path(out).string() + " 2> " +
                            path("stderr.txt").string();
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  fs::path dir_;
};

}  // namespace

TEST(Config, ParsesKeysCommentsAndDiagonals) {
  std::istringstream in(
      "# noise\n"
      "Q = 1,2,3,4,5,6\n"
      "dt = 0.01   # seconds\n"
      "\n"
      "seed = 42\n"
      "case = 2\n"
      "filters = RINCF, EKF\n"
      "omega_max = 1, 2.5\n"
      "index_convention = colrow\n");
  RunConfig cfg;
  parse_config(in, cfg);
  EXPECT_EQ(cfg.noise.Q.diagonal(), (Vec6() << 1, 2, 3, 4, 5, 6).finished());
  EXPECT_DOUBLE_EQ(cfg.noise.dt, 0.01);
  EXPECT_EQ(cfg.seed, 42u);
  ASSERT_TRUE(cfg.trajectory);
  EXPECT_EQ(cfg.trajectory->id, 2);
  ASSERT_EQ(cfg.filters.size(), 2u);
  EXPECT_EQ(cfg.filters[0], filters::FilterKind::RINCF);
  EXPECT_EQ(cfg.filters[1], filters::FilterKind::EKF);
  EXPECT_EQ(cfg.omega_max, (std::vector<double>{1.0, 2.5}));
  EXPECT_EQ(cfg.convention, riccati::IndexConvention::ColRow);
}

TEST(Config, LaterKeysAndOverridesWin) {
  std::istringstream in("dt = 0.01\ndt = 0.02\n");
  RunConfig cfg;
  parse_config(in, cfg);
  EXPECT_DOUBLE_EQ(cfg.noise.dt, 0.02);
  apply_override(cfg, "dt=0.004");
  EXPECT_DOUBLE_EQ(cfg.noise.dt, 0.004);
}

TEST(Config, ErrorsNameTheLine) {
  for (const std::string text : {"dt = 0.01\nbogus = 1\n", "dt = 0.01\nQ = 1,2\n", "\n\nno equals sign\n"}) {
    std::istringstream in(text);
    RunConfig cfg;
    try {
      parse_config(in, cfg);
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Parse);
      const std::string expect = text[0] == '\n' ? "line 3" : "line 2";
      EXPECT_NE(std::string(e.what()).find(expect), std::string::npos) << e.what();
    }
  }
}

TEST(Config, CustomTrajectoryAxes) {
  RunConfig cfg;
  apply_override(cfg, "omega_y=0.5,2,0.1");
  ASSERT_TRUE(cfg.trajectory);
  EXPECT_EQ(cfg.trajectory->id, 0);
  EXPECT_DOUBLE_EQ(cfg.trajectory->axes[1].amplitude, 0.5);
  EXPECT_DOUBLE_EQ(cfg.trajectory->axes[0].amplitude, 0.0);
}

TEST(Mask, ParsesListsAndKeywords) {
  const auto m = parse_mask("1:4, 6:3");
  EXPECT_EQ(m.size(), 2u);
  EXPECT_TRUE(m.contains(1, 4));
  EXPECT_TRUE(m.contains(6, 3));
  EXPECT_EQ(parse_mask("selective").size(), 6u);
  EXPECT_TRUE(parse_mask("none").empty());
  EXPECT_EQ(kind_of([] { parse_mask("7:1"); }), ErrorKind::IndexOutOfRange);
  EXPECT_EQ(kind_of([] { parse_mask("1-2"); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([] { parse_mask("1.5:2"); }), ErrorKind::Parse);
}

TEST(Csv, FormatRoundTripsDoubles) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) {
    EXPECT_EQ(std::stod(format_double(v)), v);
  }
}

TEST(Csv, WriteReadRoundTrip) {
  sim::SimRun run;
  run.duration = 1.0;
  const Log log = log_from_sim(sim::simulate(sim::TrajectoryCase::benchmark(1), run));
  std::stringstream buf;
  write_log(buf, log);
  const Log back = read_log(buf);
  ASSERT_EQ(back.samples.size(), log.samples.size());
  ASSERT_TRUE(back.has_truth());
  for (std::size_t i = 0; i < log.samples.size(); ++i) {
    EXPECT_EQ(back.samples[i].t, log.samples[i].t);
    EXPECT_EQ(back.samples[i].omega_m, log.samples[i].omega_m);
    EXPECT_EQ(back.samples[i].y_a, log.samples[i].y_a);
    EXPECT_EQ(back.samples[i].y_b, log.samples[i].y_b);
    EXPECT_EQ(back.truth[i].q.a, log.truth[i].q.a);
    EXPECT_EQ(back.truth[i].bias, log.truth[i].bias);
  }
}

TEST(Csv, BaseSchemaWithoutTruth) {
  std::istringstream in("t,wx,wy,wz,ax,ay,az,mx,my,mz\r\n0,0,0,0,0,0,-9.81,1,0,0\r\n0.005,0,0,0,0,0,-9.81,1,0,0\r\n");
  const Log log = read_log(in);
  EXPECT_EQ(log.samples.size(), 2u);
  EXPECT_FALSE(log.has_truth());
}

TEST(Csv, RejectsMalformedInput) {
  const std::string h = "t,wx,wy,wz,ax,ay,az,mx,my,mz\n";
  auto fails_at = [](const std::string& text, int line) {
    std::istringstream in(text);
    try {
      read_log(in);
      ADD_FAILURE() << text;
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::Parse);
      EXPECT_NE(std::string(e.what()).find("line " + std::to_string(line)), std::string::npos) << e.what();
    }
  };
  fails_at("t,wx,wy\n", 1);
  fails_at("", 1);
  fails_at(h + "0,0,0,0,0,0,1,1,0\n", 2);
  fails_at(h + "0,0,0,0,0,0,1,1,0,x\n", 2);
  fails_at(h + "0,0,0,0,0,0,1,1,0,0\n0,0,0,0,0,0,1,1,0,0\n", 3);
  fails_at(h + "0.1,0,0,0,0,0,1,1,0,0\n0.2,0,0,0,0,0,1,1,0,0\n0.15,0,0,0,0,0,1,1,0,0\n", 4);
}

TEST_F(Workdir, TuneJsonRoundTrip) {
  const auto report = riccati::tune(NoiseConfig{}, {}, {1.0});
  {
    std::ofstream f(path("gains.json"));
    f << tune_to_json(report).dump(2);
  }
  const LoadedGains g = load_gains_json(path("gains.json").string());
  EXPECT_EQ(g.K, report.K);
  ASSERT_TRUE(g.rincf2);
  EXPECT_EQ(g.rincf2->p1, report.rincf2.front().p1);
  EXPECT_EQ(g.rincf2->p2, report.rincf2.front().p2);
  {
    std::ofstream f(path("bad.json"));
    f << "{\"K\": [[1,2],[3]]}";
  }
  EXPECT_EQ(kind_of([&] { load_gains_json(path("bad.json").string()); }), ErrorKind::Parse);
  EXPECT_EQ(kind_of([&] { load_gains_json(path("missing.json").string()); }), ErrorKind::InvalidConfig);
}

TEST(ExitCodes, ErrorKindsMapToCodes) {
  EXPECT_EQ(exit_code_for(ErrorKind::NonFiniteState), kNumericalError);
  EXPECT_EQ(exit_code_for(ErrorKind::EmptyWindow), kNumericalError);
  EXPECT_EQ(exit_code_for(ErrorKind::Parse), kConfigError);
  EXPECT_EQ(exit_code_for(ErrorKind::InvalidConfig), kConfigError);
  EXPECT_EQ(exit_code_for(ErrorKind::NoConvergence), kConfigError);
}

TEST(Selftest, PassesAndCatchesMutation) {
  EXPECT_TRUE(all_passed(run_selftest(NoiseConfig{})));
  const auto mutated = run_selftest(NoiseConfig{}, Mutation::TransposedRightError);
  EXPECT_FALSE(all_passed(mutated));
  for (const auto& r : mutated)
    if (r.name == "right-output-error-invariance") EXPECT_FALSE(r.pass);
}

TEST_F(Workdir, SimulateWritesHeaderAndRows) {
  ASSERT_EQ(ahrs("simulate --case 1 --seed 7 -o " + path("a.csv").string()), 0) << slurp(path("stderr.txt"));
  std::ifstream f(path("a.csv"));
  std::string line;
  std::getline(f, line);
  EXPECT_EQ(line, std::string(kLogHeader) + "," + std::string(kTruthHeader));
  int rows = 0;
  while (std::getline(f, line)) ++rows;
  EXPECT_EQ(rows, 6001);
}

TEST_F(Workdir, SimulateIsDeterministic) {
  ASSERT_EQ(ahrs("simulate --case 2 --seed 3 --duration 5 -o " + path("a.csv").string()), 0);
  ASSERT_EQ(ahrs("simulate --case 2 --seed 3 --duration 5 -o " + path("b.csv").string()), 0);
  ASSERT_EQ(ahrs("simulate --case 2 --seed 4 --duration 5 -o " + path("c.csv").string()), 0);
  EXPECT_EQ(slurp(path("a.csv")), slurp(path("b.csv")));
  EXPECT_NE(slurp(path("a.csv")), slurp(path("c.csv")));
}

TEST_F(Workdir, RunRoundTripWithPerfectInit) {
  ASSERT_EQ(ahrs("simulate --case 1 --seed 1 --duration 5 -o " + path("log.csv").string()), 0);
  for (const char* name : {"NCF", "RIEKF*", "RINCF", "RINCF2", "EKF", "WAB"}) {
    ASSERT_EQ(ahrs("run -f '" + std::string(name) + "' -i " + path("log.csv").string() + " -o " +
                   path("est.csv").string()),
              0)
        << name << ": " << slurp(path("stderr.txt"));
    std::ifstream f(path("est.csv"));
    std::string line;
    std::getline(f, line);
    EXPECT_EQ(line.rfind("t,qw,qx,qy,qz", 0), 0u);
    int rows = 0;
    while (std::getline(f, line)) ++rows;
    EXPECT_EQ(rows, 1001) << name;
  }
}

TEST_F(Workdir, NoiselessRunStaysOnTruth) {
  {
    std::ofstream c(path("cfg.txt"));
    c << "Q = 0,0,0,0,0,0\nR = 0,0,0,0,0,0\ncase = 1\nduration = 5\n";
  }
  ASSERT_EQ(ahrs("simulate -c " + path("cfg.txt").string() + " -o " + path("log.csv").string()), 0)
      << slurp(path("stderr.txt"));
  ASSERT_EQ(ahrs("run -f RINCF --perfect-init -i " + path("log.csv").string() + " -o " + path("est.csv").string()), 0)
      << slurp(path("stderr.txt"));
  std::ifstream lf(path("log.csv")), ef(path("est.csv"));
  const Log log = read_log(lf);
  std::string line;
  std::getline(ef, line);
  double worst = 0.0;
  for (std::size_t i = 0; std::getline(ef, line); ++i) {
    std::vector<double> v;
    for (const auto& cell : detail::split(line, ',')) v.push_back(std::stod(cell));
    const Quat q{v[1], v[2], v[3], v[4]};
    worst = std::max(worst, metrics::attitude_error(log.truth[i].q, q).angle);
  }
  EXPECT_LE(worst, 1e-6);
}

TEST_F(Workdir, ExitCodes) {
  EXPECT_EQ(ahrs("selftest"), 0) << slurp(path("stdout.txt"));
  EXPECT_EQ(ahrs("selftest --mutate transposed-right-error"), 1);
  EXPECT_EQ(ahrs("selftest --set R=0,0,0,0,0,0"), 1);
  {
    std::ofstream c(path("bad.cfg"));
    c << "dt = fast\n";
  }
  EXPECT_EQ(ahrs("tune -c " + path("bad.cfg").string()), 2);
  EXPECT_NE(slurp(path("stderr.txt")).find("line 1"), std::string::npos);
  EXPECT_EQ(ahrs("tune --no-such-flag"), 2);
  {
    std::ofstream l(path("bad.csv"));
    l << "t,wx,wy,wz,ax,ay,az,mx,my,mz\n0,0,0,0,0,0,1,1,0\n";
  }
  EXPECT_EQ(ahrs("run -f NCF -i " + path("bad.csv").string()), 2);
  {
    std::ofstream l(path("huge.csv"));
    l << "t,wx,wy,wz,ax,ay,az,mx,my,mz\n0,0,0,0,0,0,-9.81,1,0,0\n0.005,1e308,1e308,1e308,0,0,-9.81,1,0,0\n";
  }
  EXPECT_EQ(ahrs("run -f NCF -i " + path("huge.csv").string()), 3) << slurp(path("stderr.txt"));
  EXPECT_EQ(ahrs("compare --no-timing -f NCF,RINCF --case 1 --duration 2 --window 5"), 3) << slurp(path("stderr.txt"));
}

TEST_F(Workdir, TuneWritesLoadableJson) {
  ASSERT_EQ(ahrs("tune --omega-max 1 --json " + path("g.json").string()), 0) << slurp(path("stderr.txt"));
  const LoadedGains g = load_gains_json(path("g.json").string());
  const auto direct = riccati::tune(NoiseConfig{}, {}, {1.0});
  EXPECT_LE((g.K - direct.K).cwiseAbs().maxCoeff(), 1e-15);
  EXPECT_NE(slurp(path("stdout.txt")).find("residual"), std::string::npos);
}
