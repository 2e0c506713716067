#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "novas/cli.hpp"
#include "test_support.hpp"

using namespace novas;

namespace {

std::string tmp(const std::string& name) { return std::string(NOVAS_TEST_TMPDIR) + "/" + name; }

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "novas");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream f(path);
  f << text;
}

std::string last_line(const std::string& s) {
  auto end = s.find_last_not_of('\n');
  auto start = s.rfind('\n', end);
  return s.substr(start == std::string::npos ? 0 : start + 1, end - (start == std::string::npos ? 0 : start + 1) + 1);
}

/// Noiseless y = x1^2 + x2^2 with eight irrelevant columns, as CSV.
std::string quadratic_csv(Eigen::MatrixXd& x, Eigen::VectorXd& y) {
  x = testing_support::uniform_matrix(200, 10, 2024);
  y = x.col(0).array().square() + x.col(1).array().square();
  std::ostringstream os;
  for (int j = 1; j <= 10; ++j) os << "x" << j << ',';
  os << "y\n";
  char buf[64];
  for (Eigen::Index i = 0; i < 200; ++i) {
    for (Eigen::Index j = 0; j < 10; ++j) {
      std::snprintf(buf, sizeof buf, "%.17g,", x(i, j));
      os << buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g\n", y[i]);
    os << buf;
  }
  return os.str();
}

}  // namespace

TEST_CASE("select on a small file prints a summary and writes a trace", "[cli]") {
  const auto data = tmp("small.csv");
  write_file(data, "a,b,c,y\n0.1,0.5,0.3,1.2\n0.9,0.1,0.2,2.1\n0.4,0.8,0.7,0.3\n0.2,0.3,0.9,1.5\n"
                   "0.7,0.6,0.1,0.9\n0.5,0.2,0.5,1.1\n0.3,0.9,0.4,0.7\n0.8,0.4,0.8,1.9\n");
  const auto r = run_cli({"select", "--data", data, "--response", "y", "--threads", "1"});
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("Final (novas, stage"));
  std::ifstream trace(data + ".trace.jsonl");
  CHECK(trace.good());
}

TEST_CASE("select finds x1 and x2 in a noiseless quadratic", "[cli][slow]") {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  const auto path = tmp("quadratic.csv");
  write_file(path, quadratic_csv(x, y));
  const auto trace_path = tmp("quadratic.trace.jsonl");
  const auto r = run_cli({"select", "--data", path, "--response", "y", "--out", trace_path});
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK_THAT(last_line(r.out), Catch::Matchers::StartsWith("Final (novas, stage 2): {1 2} [x1 x2] cv "));

  const auto ex = exhaustive_select(standardize(Dataset(x, y)), SelectorConfig{}, 2);
  CHECK(ex.best.indices == IndexSet{0, 1});

  const auto again = run_cli({"summary", "--trace", trace_path});
  CHECK(again.code == 0);
  CHECK(again.out == r.out);
}

TEST_CASE("mpdp is available from select", "[cli]") {
  Eigen::MatrixXd x;
  Eigen::VectorXd y;
  const auto path = tmp("quadratic_mpdp.csv");
  write_file(path, quadratic_csv(x, y));
  const auto r = run_cli({"select", "--data", path, "--response", "11", "--selector", "mpdp", "--out",
                          tmp("quadratic_mpdp.trace.jsonl")});
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK_THAT(last_line(r.out), Catch::Matchers::StartsWith("Final (mpdp, stage 2): {1 2}"));
}

TEST_CASE("input problems exit with code 2", "[cli][errors]") {
  const auto constant = tmp("constant.csv");
  write_file(constant, "a,flat,y\n1,5,1\n2,5,2\n3,5,4\n4,5,3\n");
  const auto r = run_cli({"select", "--data", constant, "--response", "y"});
  CHECK(r.code == 2);
  CHECK_THAT(r.err, Catch::Matchers::ContainsSubstring("'flat'"));

  const auto ragged = tmp("ragged.csv");
  write_file(ragged, "a,b,y\n1,2,3\n4,5\n");
  CHECK(run_cli({"select", "--data", ragged, "--response", "y"}).code == 2);
  CHECK(run_cli({"select", "--data", tmp("missing.csv"), "--response", "y"}).code == 2);
  CHECK(run_cli({"select", "--data", constant, "--response", "nope"}).code == 2);
}

TEST_CASE("configuration problems exit with code 3", "[cli][errors]") {
  const auto cfg = tmp("bad_config.json");
  write_file(cfg, R"({"thresh": 0.1})");
  const auto data = tmp("small_cfg.csv");
  write_file(data, "a,b,y\n1,2,3\n2,1,4\n3,3,1\n4,0,2\n");
  CHECK(run_cli({"select", "--data", data, "--response", "y", "--config", cfg}).code == 3);
  CHECK(run_cli({"simulate", "--reps", "0"}).code == 3);
  CHECK(run_cli({"benchmark", "--p", "100"}).code == 3);
  CHECK(run_cli({"select", "--data", data, "--response", "y", "--threshold", "2"}).code == 3);
  CHECK(run_cli({"select", "--data", data, "--response", "y", "--weight", "tri"}).code == 3);
  CHECK(run_cli({"frobnicate"}).code == 3);
  CHECK(run_cli({}).code == 3);
  CHECK(run_cli({"simulate", "--model", "m7"}).code == 3);
}

TEST_CASE("command line values override the config file", "[cli]") {
  const auto cfg = tmp("sim_config.json");
  write_file(cfg, R"({"model": "m2", "n": 40, "p": 6, "reps": 2, "threshold": 0.3})");
  const auto out = tmp("sim_report.jsonl");
  const auto r = run_cli({"simulate", "--config", cfg, "--n", "50", "--out", out, "--threads", "1"});
  INFO(r.err);
  REQUIRE(r.code == 0);
  std::ifstream in(out);
  const auto j = nlohmann::json::parse(in);
  CHECK(j.at("model") == "m2");
  CHECK(j.at("n") == 50);
  CHECK(j.at("p") == 6);
  CHECK(j.at("replications") == 2);
  CHECK(j.at("threshold") == 0.3);
}

TEST_CASE("simulate can run both selectors", "[cli]") {
  const auto r = run_cli({"simulate", "--model", "m4", "--trap", "--n", "40", "--p", "6", "--reps", "2", "--selector",
                          "both", "--threads", "1"});
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("novas"));
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("mpdp"));
}

TEST_CASE("benchmark reports one row per p and a slope", "[cli]") {
  const auto out = tmp("bench.jsonl");
  const auto r = run_cli({"benchmark", "--p", "10,20", "--n", "30", "--stages", "2", "--repeats", "1", "--out", out});
  INFO(r.err);
  REQUIRE(r.code == 0);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("log-log slope"));
  std::ifstream in(out);
  std::string line;
  int rows = 0;
  while (std::getline(in, line)) rows += nlohmann::json::parse(line).at("type") == "timing";
  CHECK(rows == 2);
}

TEST_CASE("help exits cleanly", "[cli]") {
  const auto r = run_cli({"--help"});
  CHECK(r.code == 0);
  CHECK_THAT(r.out, Catch::Matchers::ContainsSubstring("select"));
  const auto sub = run_cli({"select", "--help"});
  CHECK(sub.code == 0);
  CHECK_THAT(sub.out, Catch::Matchers::ContainsSubstring("--threshold"));
}

TEST_CASE("NOVAS_THREADS sets the default worker count", "[cli]") {
  setenv("NOVAS_THREADS", "3", 1);
  CHECK(default_thread_count() == 3);
  setenv("NOVAS_THREADS", "zero", 1);
  CHECK(default_thread_count() >= 1);
  unsetenv("NOVAS_THREADS");
  CHECK(default_thread_count() >= 1);
}
