#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "qclt/spectral_oracle.hpp"

using namespace qclt;
using namespace qclt::testing;
using std::numbers::pi;

namespace {

/// cov(X_0, X_j) = pi . (h * Q^j h), straight from matrix powers.
double chain_covariance(const FiniteMarkovFn &m, int lag) {
  Eigen::VectorXd v = m.observable;
  for (int i = 0; i < lag; ++i) {
    v = m.kernel * v;
  }
  return m.stationary.dot(m.observable.cwiseProduct(v));
}

} // namespace

TEST_CASE("white noise density is flat") {
  for (double t : {0.2, 1.0, 3.0}) {
    CHECK(spectral_density_linear(white_noise(), t).f == doctest::Approx(1.0 / (2.0 * pi)));
  }
}

TEST_CASE("AR(1) density") {
  CHECK(spectral_density_linear(ar1(), pi).f == doctest::Approx(4.0 / (18.0 * pi)).epsilon(1e-12));
  CHECK(spectral_density_linear(ar1(), 1e-9).f == doctest::Approx(4.0 / (2.0 * pi)).epsilon(1e-8));
}

TEST_CASE("flip chain density has the AR(1)-type form") {
  for (double p : {0.1, 0.25, 0.5, 0.8}) {
    const double rho = 1.0 - 2.0 * p;
    for (double t : {0.3, 1.0, 2.0, 2.9}) {
      const double expected =
          (1.0 - rho * rho) / (1.0 - 2.0 * rho * std::cos(t) + rho * rho) / (2.0 * pi);
      CHECK(spectral_density_markov(flip_chain(p), t).f ==
            doctest::Approx(expected).epsilon(1e-12));
    }
  }
  CHECK(spectral_density_markov(flip_chain(0.5), 1.0).f == doctest::Approx(1.0 / (2.0 * pi)));
}

TEST_CASE("one-state chain has zero density") {
  FiniteMarkovFn m;
  m.kernel = Eigen::MatrixXd::Ones(1, 1);
  m.stationary = Eigen::VectorXd::Ones(1);
  m.observable = Eigen::VectorXd::Zero(1);
  CHECK(spectral_density_markov(m, 1.0).f == 0.0);
}

TEST_CASE("closed-form chain density matches the covariance series") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto m = random_reversible(3 + static_cast<Eigen::Index>(seed % 2), seed);
    const Eigen::VectorXd cov = autocovariances(m, 400);
    for (int lag = 0; lag < 6; ++lag) {
      CHECK(cov(lag) == doctest::Approx(chain_covariance(m, lag)).epsilon(1e-12));
    }
    const double t = 0.9;
    double series = cov(0);
    for (Eigen::Index j = 1; j < cov.size(); ++j) {
      series += 2.0 * cov(j) * std::cos(static_cast<double>(j) * t);
    }
    CHECK(spectral_density_markov(m, t).f == doctest::Approx(series / (2.0 * pi)).epsilon(1e-9));
  }
}

TEST_CASE("periodic chain is rejected") {
  ReversibleMarkovFn m = flip_chain(1.0);
  CHECK_THROWS_AS(spectral_density_markov(m, 1.0), NonSummableError);
}

TEST_CASE("exact variance of the finite transform") {
  for (Eigen::Index n : {1, 10, 1000}) {
    CHECK(exact_variance_S(white_noise(), n, 0.7) == doctest::Approx(static_cast<double>(n)));
  }
  const double t = pi / 3.0;
  const auto chain = flip_chain(0.25);
  const double ratio = exact_variance_S(chain, 1 << 14, t) / static_cast<double>(1 << 14);
  CHECK(std::abs(ratio / (2.0 * pi * spectral_density_markov(chain, t).f) - 1.0) < 0.01);
}

TEST_CASE("long memory at zero frequency") {
  GaussianLRD g;
  g.alpha = 0.4;
  const double growth = exact_variance_S(g, 4096, 0.0) / 4096.0 / (exact_variance_S(g, 1024, 0.0) / 1024.0);
  CHECK(std::abs(growth / std::pow(4.0, 0.6) - 1.0) < 0.15);
  CHECK_FALSE(spectral_density(g, 0.5).has_value());
}
