#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "qclt/process_models.hpp"
#include "qclt/spec_io.hpp"

using namespace qclt;
using namespace qclt::testing;

TEST_CASE("geometric coefficients and exact tail") {
  const auto c = CoefficientSequence::geometric(0.5, 2.0);
  CHECK(c(0) == doctest::Approx(2.0));
  CHECK(c(3) == doctest::Approx(0.25));
  double brute = 0.0;
  for (std::size_t j = 10; j < 200; ++j) {
    brute += c(j) * c(j);
  }
  CHECK(c.tail_square_bound(10) == doctest::Approx(brute).epsilon(1e-12));
  CHECK(c.square_sum() == doctest::Approx(4.0 / 0.75).epsilon(1e-12));
}

TEST_CASE("power tail bound dominates the partial sum") {
  const auto c = CoefficientSequence::power(1.0, 2.0, 1.0, 1.0);
  double brute = 0.0;
  for (std::size_t j = 100; j < 2'000'000; ++j) {
    brute += c(j) * c(j);
  }
  CHECK(c.tail_square_bound(100) >= brute);
  CHECK(c.tail_square_bound(100) < 2.0 * brute);
}

TEST_CASE("validation names the defect") {
  FiniteMarkovFn m;
  m.kernel.resize(2, 2);
  m.kernel << 0.5, 0.5, 0.5, 0.4;
  m.stationary = Eigen::Vector2d(0.5, 0.5);
  m.observable = Eigen::Vector2d(1.0, -1.0);
  try {
    validate(ProcessSpec{m});
    FAIL("expected a validation error");
  } catch (const ValidationError &e) {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }

  ReversibleMarkovFn chain = flip_chain(0.25);
  chain.observable = Eigen::Vector2d(1.0, 0.0);
  CHECK_THROWS_AS(validate(ProcessSpec{chain}), ValidationError);

  LinearProcess p = ar1();
  p.coeffs = CoefficientSequence::power(0.4);
  CHECK_THROWS_AS(validate(ProcessSpec{p}), ValidationError);

  CHECK_THROWS_AS(validate_origin(ProcessSpec{ar1()}, MarkovStart{0}), ValidationError);
}

TEST_CASE("parse errors carry the line") {
  const std::string text = "family: finite_markov\n"
                           "kernel:\n"
                           "  - [0.5, 0.5]\n"
                           "  - [0.5, 0.4]\n"
                           "observable: [1, -1]\n";
  try {
    parse_spec_text(text);
    FAIL("expected a validation error");
  } catch (const ValidationError &e) {
    const std::string what = e.what();
    CHECK(what.find("line 4") != std::string::npos);
    CHECK(what.find("row 1") != std::string::npos);
  }
}

TEST_CASE("spec text round trip keeps the hash") {
  const ProcessSpec spec = walk3();
  const ProcessSpec again = parse_spec_text(canonical_text(spec));
  CHECK(spec_hash(spec) == spec_hash(again));
  CHECK(family_name(again) == family_name(spec));
}

TEST_CASE("stationary law of a two-state kernel") {
  Eigen::Matrix2d q;
  q << 0.9, 0.1, 0.3, 0.7;
  const Eigen::VectorXd pi = stationary_distribution(q);
  CHECK(pi(0) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(pi(1) == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("identity filter returns its innovations") {
  const Trajectory a = sample_stationary(white_noise(), 3, 42);
  const Trajectory b = sample_stationary(white_noise(), 3, 42);
  const Trajectory c = sample_stationary(white_noise(), 3, 43);
  REQUIRE(a.values.size() == 3);
  CHECK((a.values - a.innovations).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.values == b.values);
  CHECK(a.values != c.values);
}

TEST_CASE("flip chain sample mean concentrates") {
  const double p = 0.25;
  const double rho = 1.0 - 2.0 * p;
  const Eigen::Index n = 100'000;
  const Trajectory path = sample_stationary(flip_chain(p), n, 7);
  // Var(n^{-1/2} sum X) -> (1 + rho) / (1 - rho)
  const double c = std::sqrt((1.0 + rho) / (1.0 - rho));
  CHECK(std::abs(path.values.mean()) < 3.0 * c / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("long-range dependent pair covariance") {
  GaussianLRD g;
  g.alpha = 0.4;
  const StationarySampler sampler(g, 2);
  double sum = 0.0;
  const int draws = 100'000;
  for (int s = 0; s < draws; ++s) {
    const Trajectory t = sampler.sample(derive_seed(9, "pairs", s));
    sum += t.values(0) * t.values(1);
  }
  CHECK(std::abs(sum / draws - std::pow(2.0, -0.2)) < 0.02);
  CHECK(lrd_min_eigenvalue(0.4, 256) > -1e-8);
}

TEST_CASE("frozen unit past with silent future noise") {
  const LinearProcess p = ar1(0.5, 0.0);
  Eigen::VectorXd past(3);
  past << 1.0, 0.0, 0.0;
  const Trajectory t = sample_quenched(p, LinearPast{past}, 8, 1);
  for (Eigen::Index k = 1; k <= 8; ++k) {
    CHECK(t.values(k - 1) == doctest::Approx(std::pow(0.5, static_cast<double>(k))));
  }
}

TEST_CASE("absorbing start stays put") {
  FiniteMarkovFn m;
  m.kernel.resize(2, 2);
  m.kernel << 1.0, 0.0, 0.5, 0.5;
  m.stationary = Eigen::Vector2d(1.0, 0.0);
  m.observable = Eigen::Vector2d(0.0, 2.0);
  const Trajectory t = sample_quenched(m, MarkovStart{0}, 50, 3);
  CHECK(t.values.cwiseAbs().maxCoeff() == 0.0);
  for (auto s : t.states) {
    CHECK(s == 0);
  }
}

TEST_CASE("zero past leaves the identity filter memoryless") {
  const Trajectory q = sample_quenched(white_noise(), LinearPast{Eigen::VectorXd::Zero(4)}, 64, 5);
  CHECK(q.values.size() == 64);
  CHECK((q.values - q.innovations).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("drawn origins follow the stationary law") {
  const ProcessSpec chain = flip_chain(0.3);
  int zeros = 0;
  const int draws = 10'000;
  for (int s = 0; s < draws; ++s) {
    zeros += std::get<MarkovStart>(draw_origin(chain, derive_seed(1, "o", s))).state == 0;
  }
  CHECK(std::abs(static_cast<double>(zeros) / draws - 0.5) < 0.02);

  GaussianLRD g;
  double sq = 0.0;
  const int gdraws = 40'000;
  for (int s = 0; s < gdraws; ++s) {
    const double y = std::get<GaussianPast>(draw_origin(g, derive_seed(2, "o", s), 4)).values(0);
    sq += y * y;
  }
  CHECK(std::abs(sq / gdraws - 1.0) < 0.03);
}

TEST_CASE("linear window and truncation bias") {
  LinearProcess p = ar1(0.5);
  const std::size_t w = linear_window(p);
  CHECK(w > 10);
  CHECK(w <= p.max_window);
  CHECK(linear_truncation_bias(p, w) < 1e-8);

  LinearProcess slow;
  slow.coeffs = CoefficientSequence::power(0.6);
  slow.max_window = 1024;
  CHECK(linear_window(slow) == 1024);
  CHECK(linear_truncation_bias(slow, 1024) > 0.0);
}

TEST_CASE("affine recursion contraction") {
  IteratedRandomFn f;
  f.slope = 0.5;
  const auto [beta, rate] = irf_contraction(f);
  CHECK(beta == doctest::Approx(1.0));
  CHECK(rate == doctest::Approx(0.5));
  CHECK(irf_mean_log_slope(f) == doctest::Approx(std::log(0.5)));
}
