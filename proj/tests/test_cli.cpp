#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <string>

#include "app.hpp"

namespace fs = std::filesystem;
using namespace qclt::app;

namespace {

fs::path scratch(const std::string &name) {
  const fs::path dir = fs::temp_directory_path() / ("qclt_cli_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path &dir, const std::string &text) {
  const fs::path path = dir / "config.yaml";
  std::ofstream(path) << text;
  return path;
}

std::vector<std::string> lines_of(const fs::path &path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    out.push_back(line);
  }
  return out;
}

const char *white_noise = "spec:\n"
                          "  family: linear\n"
                          "  coefficients: {prefix: [1.0]}\n";

} // namespace

TEST_CASE("simulate writes n rows and is reproducible") {
  const fs::path dir = scratch("simulate");
  const fs::path cfg = write_config(dir, std::string("seed: 4\nn: 100\n") + white_noise);
  RunOptions o;
  o.command = "simulate";
  o.config = cfg;
  o.out = dir / "a";
  CHECK(run(o).exit_code == 0);
  o.out = dir / "b";
  CHECK(run(o).exit_code == 0);
  CHECK(lines_of(dir / "a" / "trajectory.csv").size() == 101);
  CHECK(file_digest(dir / "a" / "trajectory.csv") == file_digest(dir / "b" / "trajectory.csv"));
  CHECK(fs::exists(dir / "a" / "manifest.yaml"));

  o.overrides.seed = 5;
  o.out = dir / "c";
  run(o);
  CHECK(file_digest(dir / "a" / "trajectory.csv") != file_digest(dir / "c" / "trajectory.csv"));
  const YAML::Node manifest = YAML::LoadFile((dir / "c" / "manifest.yaml").string());
  CHECK(manifest["overrides"]["seed"].as<int>() == 5);
  CHECK(manifest["seed"].as<int>() == 5);
}

TEST_CASE("invalid kernel is reported with its line and row") {
  const fs::path dir = scratch("invalid");
  const fs::path cfg = write_config(dir, "spec:\n"
                                         "  family: finite_markov\n"
                                         "  kernel:\n"
                                         "    - [0.5, 0.5]\n"
                                         "    - [0.5, 0.4]\n"
                                         "  observable: [1, -1]\n");
  RunOptions o;
  o.command = "simulate";
  o.config = cfg;
  o.out = dir / "out";
  try {
    run(o);
    FAIL("expected a config error");
  } catch (const ConfigError &e) {
    const std::string what = e.what();
    CHECK(what.find("line 5") != std::string::npos);
    CHECK(what.find("row 1") != std::string::npos);
  }
}

TEST_CASE("unknown keys are rejected") {
  const fs::path dir = scratch("unknown");
  const fs::path cfg = write_config(dir, std::string("replicats: 10\n") + white_noise);
  RunOptions o;
  o.command = "quenched";
  o.config = cfg;
  o.out = dir / "out";
  CHECK_THROWS_AS(run(o), ConfigError);
}

TEST_CASE("periodogram of an impulse is flat") {
  const fs::path dir = scratch("impulse");
  const fs::path cfg = write_config(dir, std::string("values: [1, 0, 0, 0, 0, 0, 0, 0]\n") + white_noise);
  RunOptions o;
  o.command = "periodogram";
  o.config = cfg;
  o.out = dir / "out";
  const RunResult r = run(o);
  CHECK(r.exit_code == 0);
  const auto rows = lines_of(dir / "out" / "periodogram.csv");
  REQUIRE(rows.size() == 8);
  const double expected = 1.0 / (2.0 * std::numbers::pi * 8.0);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double value = std::stod(rows[i].substr(rows[i].rfind(',') + 1));
    CHECK(value == doctest::Approx(expected).epsilon(1e-14));
  }
}

TEST_CASE("white noise periodogram mean follows Parseval") {
  const fs::path dir = scratch("parseval");
  const fs::path cfg = write_config(dir, std::string("seed: 2\nn: 16384\n") + white_noise);
  RunOptions o;
  o.command = "periodogram";
  o.config = cfg;
  o.out = dir / "out";
  run(o);
  const YAML::Node summary = YAML::LoadFile((dir / "out" / "periodogram.yaml").string());
  CHECK(std::abs(summary["mean_I"].as<double>() * 2.0 * std::numbers::pi - 1.0) < 0.05);
  CHECK(summary["density_overlay"].as<bool>());
  CHECK(fs::exists(dir / "out" / "density.csv"));
}

TEST_CASE("long memory at zero frequency is out of scope for the conditions") {
  const fs::path dir = scratch("lrd");
  const fs::path cfg = write_config(dir, "t: 0.0\n"
                                         "spec: {family: gaussian_lrd, alpha: 0.4}\n");
  RunOptions o;
  o.command = "conditions";
  o.config = cfg;
  o.out = dir / "out";
  CHECK(run(o).exit_code == 0);
  const YAML::Node doc = YAML::LoadFile((dir / "out" / "conditions.yaml").string());
  CHECK(doc["scope"].as<std::string>() == "out_of_scope");
  CHECK(doc["variance_growth"]["rows"].size() == 3);
}

TEST_CASE("failing tolerances set the exit code and list the failures") {
  const fs::path dir = scratch("failing");
  const fs::path cfg = write_config(dir, std::string("seed: 1\nn: 256\nreplicates: 200\n"
                                                     "frequencies: [1.0]\n"
                                                     "tolerances: {ks: 0.0001}\n") +
                                             white_noise);
  RunOptions o;
  o.command = "quenched";
  o.config = cfg;
  o.out = dir / "out";
  const RunResult r = run(o);
  CHECK(r.exit_code == 1);
  REQUIRE(fs::exists(dir / "out" / "failures.txt"));
  CHECK(lines_of(dir / "out" / "failures.txt").front().find("KS") != std::string::npos);
}

TEST_CASE("manifest replay reproduces the outputs") {
  const fs::path dir = scratch("replay");
  const fs::path cfg = write_config(dir, std::string("seed: 9\nn: 512\nreplicates: 200\n"
                                                     "frequencies: random:3\n"
                                                     "tolerances: {ks: 1, correlation: 1, variance_rel: 1,"
                                                     " periodogram_ks: 1, periodogram_mean_lo: 0,"
                                                     " periodogram_mean_hi: 9}\n") +
                                             white_noise);
  RunOptions o;
  o.command = "quenched";
  o.config = cfg;
  o.out = dir / "first";
  run(o);
  const RunResult again = replay(dir / "first" / "manifest.yaml", dir / "second", 3);
  CHECK(again.failures.empty());
  CHECK(file_digest(dir / "first" / "report.yaml") == file_digest(dir / "second" / "report.yaml"));
  CHECK(file_digest(dir / "first" / "raw.csv") == file_digest(dir / "second" / "raw.csv"));
}
