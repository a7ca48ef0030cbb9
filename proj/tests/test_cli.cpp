#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <unistd.h>

#include <nlohmann/json.hpp>

#include "xclust/cli.hpp"
#include "xclust/parallel.hpp"

using namespace xclust;
using namespace xclust::cli;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("xclust-test-cli-" + std::to_string(::getpid())) / name;
  fs::remove_all(dir);
  fs::create_directories(dir.parent_path());
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const char* kIidTheta = R"({
  "model": {"kind": "iid-pareto", "alpha": 1.0},
  "n_grid": [10000],
  "replications": 400,
  "seed": 5,
  "checks": ["theta"]
})";

int call(std::vector<std::string> args) {
  args.insert(args.begin(), "xclust");
  std::vector<char*> argv;
  for (auto& a : args) argv.push_back(a.data());
  return main_entry(static_cast<int>(argv.size()), argv.data());
}

}  // namespace

TEST_CASE("config parsing") {
  const auto c = parse_config(kIidTheta);
  CHECK(c.model.kind == ModelKind::IidPareto);
  CHECK(c.n_grid == std::vector<std::size_t>{10'000});
  CHECK(c.replications == 400);
  CHECK(c.seed == 5);
  CHECK(c.block_exponent == 0.5);
  CHECK(c.threshold == 1.0);
  CHECK(c.checks == std::vector<std::string>{"theta"});

  const auto mm = parse_config(R"({"model": {"kind": "mm-multivariate", "alpha": 1.5,
      "coefficients": [[1, 0.5], [0.2, 1]], "common_shock": true, "norm": "euclidean"},
      "n_grid": [100, 1000], "checks": ["tail", "m1demo"]})");
  CHECK(mm.model.dim == 2);
  CHECK(mm.model.common_shock);
  CHECK(mm.model.norm == Norm::Euclidean);
  CHECK(mm.model.coefficients[1] == std::vector<double>{0.2, 1.0});
}

TEST_CASE("config validation errors") {
  const std::string model = R"("model": {"kind": "iid-pareto", "alpha": 1.0})";
  auto cfg = [&](const std::string& rest) { return "{" + model + ", " + rest + "}"; };
  CHECK_THROWS_AS(parse_config(cfg(R"("n_grid": [100], "checks": [])")), ConfigError);
  CHECK_THROWS_AS(parse_config(cfg(R"("n_grid": [100], "checks": ["garch"])")), ConfigError);
  CHECK_THROWS_AS(parse_config(cfg(R"("n_grid": [], "checks": ["theta"])")), ConfigError);
  CHECK_THROWS_AS(parse_config(cfg(R"("n_grid": [1000, 100], "checks": ["theta"])")), ConfigError);
  CHECK_THROWS_AS(parse_config(cfg(R"("n_grid": [100], "replications": 0, "checks": ["theta"])")), ConfigError);
  CHECK_THROWS_AS(parse_config(cfg(R"("n_grid": [100], "block_exponent": 1.0, "checks": ["theta"])")), ConfigError);
  CHECK_THROWS_AS(parse_config(cfg(R"("n_grid": [100])")), ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"kind": "iid-pareto", "alpha": -1}, "n_grid": [100], "checks": ["theta"]})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config(R"({"model": {"kind": "iid-pareto", "norm": "l1"}, "n_grid": [100], "checks": ["theta"]})"),
                  ConfigError);
  CHECK_THROWS_AS(parse_config("{not json"), ConfigError);

  try {
    load_config("/nonexistent/xclust.json");
    FAIL("expected IoError");
  } catch (const IoError& e) {
    CHECK(std::string(e.what()).find("/nonexistent/xclust.json") != std::string::npos);
  }
}

TEST_CASE("theta check on iid passes with reference 1") {
  const auto records = run_checks(parse_config(kIidTheta));
  REQUIRE(records.size() == 1);
  const auto& r = records[0];
  CHECK(r.check == "theta");
  CHECK(r.n == 10'000);
  CHECK(r.reference.value() == 1.0);
  CHECK(r.verdict == "pass");
  CHECK(std::abs(r.value - 1.0) < 3.0 * r.std_error);
  CHECK_FALSE(r.failed());
}

TEST_CASE("report schema") {
  ReportRecord r{"theta", 100, "theta_hat", 0.5, std::nan(""), std::nullopt, "theory", "info"};
  const auto j = nlohmann::json::parse(to_json_line(r));
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys.size() == 8);
  for (const char* k : {"check", "n", "quantity", "value", "stderr", "reference", "provenance", "verdict"}) {
    CHECK(j.contains(k));
  }
  CHECK(j["stderr"].is_null());
  CHECK(j["reference"].is_null());
  CHECK(ReportRecord{"x", 1, "q", 0, 0, 0.0, "p", "insufficient"}.failed());
}

TEST_CASE("reports are byte-identical across runs and worker counts") {
  auto config = parse_config(R"({
    "model": {"kind": "moving-maximum", "alpha": 1.0, "coefficients": [1, 1]},
    "n_grid": [1000, 4000],
    "replications": 200,
    "seed": 9,
    "checks": ["tail", "theta", "clusters", "lpareto", "spectral", "extremal"]
  })");
  const auto dir_a = scratch("det-a"), dir_b = scratch("det-b");
  config.output = dir_a;
  set_max_jobs(1);
  run(config);
  config.output = dir_b;
  set_max_jobs(3);
  run(config);
  set_max_jobs(0);

  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir_a)) files.push_back(e.path().filename().string());
  std::sort(files.begin(), files.end());
  CHECK(files == std::vector<std::string>{"clusters.csv", "extremal.csv", "lpareto.csv", "report.jsonl",
                                          "spectral.csv", "tail.csv", "theta.csv"});
  for (const auto& f : files) {
    CAPTURE(f);
    CHECK(slurp(dir_a / f) == slurp(dir_b / f));
    CHECK_FALSE(slurp(dir_a / f).empty());
  }
  CHECK(slurp(dir_a / "theta.csv").rfind("n,quantity,value,stderr,reference,verdict\n", 0) == 0);

  // Every line of the report parses and carries both n values in order.
  std::istringstream lines(slurp(dir_a / "report.jsonl"));
  std::string line;
  std::size_t last_n = 0;
  while (std::getline(lines, line)) {
    const auto j = nlohmann::json::parse(line);
    CHECK(j["n"].get<std::size_t>() >= last_n);
    last_n = j["n"].get<std::size_t>();
  }
  CHECK(last_n == 4000);

  // A different seed changes the numbers.
  config.seed = 10;
  config.output = scratch("det-c");
  run(config);
  CHECK(slurp(dir_a / "report.jsonl") != slurp(config.output / "report.jsonl"));
}

TEST_CASE("unwritable output is an I/O error") {
  const auto blocker = scratch("blocker");
  std::ofstream(blocker) << "file";
  std::vector<ReportRecord> records{{"theta", 1, "q", 1.0, 0.0, 1.0, "theory", "pass"}};
  CHECK_THROWS_AS(write_reports(blocker / "sub", records), IoError);
}

TEST_CASE("remark demo table") {
  const auto rows = demo_remark();
  REQUIRE(rows.size() == 9);
  CHECK(rows.front().n == 4);
  CHECK(rows.back().n == 1024);
  for (const auto& r : rows) {
    CHECK(r.j1 >= 0.24);
    CHECK(std::abs(r.m1 - 1.0 / static_cast<double>(r.n)) <= r.tolerance);
  }
  CHECK(rows.back().m1 < 0.01);
  for (const auto& rec : remark_records(rows)) CHECK_FALSE(rec.failed());

  // A table where J1 collapses is flagged.
  auto broken = rows;
  broken[3].j1 = 0.1;
  bool flagged = false;
  for (const auto& rec : remark_records(broken)) flagged |= rec.failed();
  CHECK(flagged);
}

TEST_CASE("command line exit codes") {
  CHECK(call({"version"}) == 0);
  CHECK(call({}) == 2);
  CHECK(call({"frobnicate"}) == 2);
  CHECK(call({"run", "/nonexistent/config.json"}) == 2);
  CHECK(call({"demo-remark"}) == 0);

  const auto dir = scratch("cli");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "theta.json") << kIidTheta;
    std::ofstream(dir / "empty.json") << R"({"model": {"kind": "iid-pareto"}, "n_grid": [100], "checks": []})";
    // Too few replications for the independence check: reported as insufficient.
    std::ofstream(dir / "thin.json")
        << R"({"model": {"kind": "iid-pareto"}, "n_grid": [1000], "replications": 5, "checks": ["independence"]})";
  }
  CHECK(call({"run", (dir / "theta.json").string(), "--out", (dir / "out").string(), "--jobs", "2"}) == 0);
  CHECK(fs::exists(dir / "out" / "report.jsonl"));
  CHECK(call({"run", (dir / "empty.json").string()}) == 2);
  CHECK(call({"run", (dir / "thin.json").string(), "--out", (dir / "thin").string()}) == 1);
  CHECK(call({"run", (dir / "theta.json").string(), "--seed", "11", "--out", (dir / "s11").string()}) == 0);
  CHECK(slurp(dir / "out" / "report.jsonl") != slurp(dir / "s11" / "report.jsonl"));
  set_max_jobs(0);
}
