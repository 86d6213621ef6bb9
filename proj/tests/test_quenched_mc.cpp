#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "qclt/martingale_engine.hpp"
#include "qclt/parallel.hpp"
#include "qclt/quenched_mc.hpp"
#include "qclt/spec_io.hpp"
#include "qclt/spectral_oracle.hpp"

using namespace qclt;
using namespace qclt::testing;
using std::numbers::pi;

namespace {

ExperimentConfig base_config(ProcessSpec spec, std::vector<double> t) {
  ExperimentConfig c;
  c.spec = std::move(spec);
  c.grid = FrequencyGrid::explicit_points(std::move(t));
  c.n = 4096;
  c.replicates = 2000;
  c.seed = 20240601;
  return c;
}

std::string report_text(const TestReport &r) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  emit(out, r);
  std::ostringstream csv;
  write_raw_csv(csv, r);
  return std::string(out.c_str()) + csv.str();
}

} // namespace

TEST_CASE("configuration invariants") {
  ExperimentConfig c = base_config(ar1(), {1.0});
  c.replicates = 99;
  CHECK_THROWS_AS(validate(c), ValidationError);
  c = base_config(ar1(), {1.0});
  c.n = 32;
  CHECK_THROWS_AS(validate(c), ValidationError);
  c = base_config(ar1(), {pi / 2.0});
  CHECK_THROWS_AS(validate(c), ValidationError);
  c.allow_excluded = true;
  CHECK_NOTHROW(validate(c));
  c = base_config(ar1(), {1.0});
  c.origin = MarkovStart{0};
  CHECK_THROWS_AS(validate(c), ValidationError);
}

TEST_CASE("white noise quenched limit") {
  ExperimentConfig c = base_config(white_noise(), {1.0});
  const TestReport r = run_quenched(c);
  REQUIRE(r.frequencies.size() == 1);
  const auto &f = r.frequencies.front();
  CHECK(f.target_variance == doctest::Approx(0.5));
  CHECK((f.variance_ratio.array() - 1.0).abs().maxCoeff() < 0.10);
  CHECK(std::abs(f.correlation) < 0.07);
  CHECK(f.ks.maxCoeff() < 0.04);
  CHECK(f.sigma2_source == "analytic");
  CHECK(r.origin_drawn);
  CHECK(r.raw.rows() == 2000);
}

TEST_CASE("silent innovations give a degenerate limit") {
  ExperimentConfig c = base_config(ar1(0.5, 0.0), {1.0});
  c.replicates = 100;
  c.n = 64;
  c.origin = LinearPast{Eigen::VectorXd::Constant(1, 5.0)};
  const TestReport r = run_quenched(c);
  const auto &f = r.frequencies.front();
  CHECK(f.degenerate);
  CHECK(f.covariance.cwiseAbs().maxCoeff() == 0.0);
  CHECK(r.passed());
}

TEST_CASE("report does not depend on the thread count") {
  ExperimentConfig c = base_config(walk3(), {0.7, 2.0});
  c.replicates = 300;
  c.n = 512;
  c.centering = CenteringMode::conditional;
  c.origin = MarkovStart{2};
  default_threads() = 1;
  const std::string one = report_text(run_quenched(c));
  default_threads() = 4;
  const std::string four = report_text(run_quenched(c));
  default_threads() = 1;
  CHECK(one == four);
}

TEST_CASE("origin invariance of the limit variance") {
  std::array<Eigen::Vector2d, 2> var;
  const std::array<double, 2> pasts = {5.0, -3.0};
  const double se_factor = std::sqrt(2.0 / 2000.0);
  for (int i = 0; i < 2; ++i) {
    ExperimentConfig c = base_config(ar1(), {1.0});
    c.origin = LinearPast{Eigen::VectorXd::Constant(1, pasts[i])};
    c.seed = 100 + i;
    const auto &f = run_quenched(c).frequencies.front();
    var[i] = f.covariance.diagonal();
  }
  for (int k = 0; k < 2; ++k) {
    const double band = 3.0 * se_factor * (var[0](k) + var[1](k));
    CHECK(std::abs(var[0](k) - var[1](k)) < band);
  }
}

TEST_CASE("conditional variance converges to 2 pi f") {
  ExperimentConfig c = base_config(ar1(), {1.0});
  c.n = 1 << 14;
  // |W|^2 is roughly exponential, so 4000 replicates put 5% at about three
  // standard errors.
  c.replicates = 4000;
  c.origin = LinearPast{Eigen::VectorXd::Constant(1, 5.0)};
  const auto &f = run_quenched(c).frequencies.front();
  const double target = 2.0 * pi * spectral_density_linear(ar1(), 1.0).f;
  CHECK(std::abs(f.conditional_second_moment / target - 1.0) < 0.05);
}

TEST_CASE("periodogram mean law") {
  ExperimentConfig c = base_config(ar1(), {1.0});
  const auto &f = run_quenched(c).frequencies.front();
  REQUIRE(f.has_periodogram);
  CHECK(f.periodogram_mean_ratio >= 0.9);
  CHECK(f.periodogram_mean_ratio <= 1.1);
  CHECK(f.periodogram_ks < 0.05);
}

TEST_CASE("centering decay") {
  const std::vector<Eigen::Index> ladder = {256, 1024, 4096, 16384};
  const auto zero = centering_decay(ar1(), LinearPast{Eigen::VectorXd::Zero(2)}, 1.0, ladder);
  for (const auto &row : zero.rows) {
    CHECK(row.value == 0.0);
  }
  CHECK(zero.decays);

  const auto unit = centering_decay(ar1(), LinearPast{Eigen::VectorXd::Ones(1)}, 1.0, ladder);
  CHECK(unit.decays);
  for (std::size_t i = 1; i < unit.rows.size(); ++i) {
    CHECK(unit.rows[i].ratio == doctest::Approx(0.5).epsilon(0.2));
  }
}

TEST_CASE("variance growth under long memory") {
  GaussianLRD g;
  g.alpha = 0.4;
  const auto table = variance_growth(g, 0.0, {1024, 4096});
  REQUIRE(table.expected_factor.has_value());
  CHECK(*table.expected_factor == doctest::Approx(std::pow(4.0, 0.6)));
  CHECK(std::abs(table.rows[1].factor / *table.expected_factor - 1.0) < 0.15);
}

TEST_CASE("Raikov diagnostics") {
  const std::vector<Eigen::Index> ladder = {256, 1024, 4096};
  SUBCASE("zero increments") {
    const auto d = raikov_diagnostics(Eigen::MatrixXcd::Zero(10, 4096), 1.0, 0.0, ladder, 0.0);
    for (const auto &row : d.rows) {
      CHECK(row.max_mean == 0.0);
      CHECK(row.sumsq_mean == 0.0);
    }
  }
  SUBCASE("ladder must have two points") {
    CHECK_THROWS(raikov_diagnostics(Eigen::MatrixXcd::Zero(10, 256), 1.0, 0.0, {256}, 1.0));
  }
  for (InnovationKind kind : {InnovationKind::rademacher, InnovationKind::normal}) {
    const LinearProcess p = white_noise(kind);
    const MartingaleKernel k = make_kernel(p, 1.0);
    const StationarySampler sampler(p, 4096);
    Eigen::MatrixXcd inc(500, 4096);
    for (Eigen::Index r = 0; r < 500; ++r) {
      inc.row(r) = martingale_increments(k, sampler.sample(derive_seed(8, "raikov", r))).transpose();
    }
    const auto d = raikov_diagnostics(inc, 1.0, 0.0, ladder, 1.0);
    CHECK(d.max_strictly_decreasing);
    CHECK(d.rows.back().sumsq_rel_error < 0.05);
    if (kind == InnovationKind::rademacher) {
      // max_k |cos(k t)| -> 1, so the diagnostic is n^{-1/2} up to a constant
      CHECK(d.max_exponent == doctest::Approx(-0.5).epsilon(0.2));
      CHECK(d.rows.back().max_mean * std::sqrt(4096.0) == doctest::Approx(1.0).epsilon(0.2));
    }
  }
}
