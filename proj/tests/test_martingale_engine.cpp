#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "qclt/fourier_stats.hpp"
#include "qclt/martingale_engine.hpp"
#include "qclt/stats.hpp"

using namespace qclt;
using namespace qclt::testing;
using std::numbers::pi;
using cd = std::complex<double>;

TEST_CASE("linear projections and transfer") {
  CHECK(projection_linear(white_noise(), 0) == 1.0);
  CHECK(projection_linear(ar1(), 3) == doctest::Approx(0.125));
  const cd c = future_transfer(ar1(), pi);
  CHECK(c.real() == doctest::Approx(-1.0 / 3.0).epsilon(1e-12));
  CHECK(std::abs(c.imag()) < 1e-12);
  CHECK(std::abs(future_transfer(white_noise(), 1.0)) == 0.0);
}

TEST_CASE("resolvent solves h = g - e^{it} Q g") {
  const auto chain = flip_chain(0.25);
  double residual = 1.0;
  const Eigen::VectorXcd g = resolvent(chain, pi / 2.0, &residual);
  const Eigen::VectorXcd h = chain.observable.cast<cd>();
  const Eigen::VectorXcd again = g - cd(0.0, 1.0) * (chain.kernel.cast<cd>() * g);
  CHECK((h - again).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(residual < 1e-12);

  CHECK_THROWS_AS(resolvent(flip_chain(1.0), pi), SingularResolventError);
}

TEST_CASE("Markov increments are martingale differences") {
  const auto chain = walk3();
  const MartingaleKernel k = make_kernel(chain, 1.0);
  const auto &mk = std::get<MarkovKernel>(k.data);
  for (Eigen::Index x = 0; x < chain.states(); ++x) {
    cd drift = 0.0;
    for (Eigen::Index y = 0; y < chain.states(); ++y) {
      drift += chain.kernel(x, y) * martingale_difference(mk, 1.0, 5, x, y);
    }
    CHECK(std::abs(drift) < 1e-14);
  }
}

TEST_CASE("conditional mean of the transform") {
  SUBCASE("zero past") {
    const LinearPast zero{Eigen::VectorXd::Zero(5)};
    CHECK(std::abs(conditional_mean_S(ar1(), zero, 100, 1.0)) == 0.0);
  }
  SUBCASE("geometric closed form") {
    Eigen::VectorXd past = Eigen::VectorXd::Zero(3);
    past(0) = 1.0;
    const double rho = 0.5;
    for (Eigen::Index n : {1, 17, 300}) {
      for (double t : {0.4, 1.0, 2.5}) {
        const cd z = rho * std::polar(1.0, t);
        const cd expected = z * (1.0 - std::pow(z, static_cast<double>(n))) / (1.0 - z);
        CHECK(std::abs(conditional_mean_S(ar1(rho), LinearPast{past}, n, t) - expected) < 1e-13);
      }
    }
  }
  SUBCASE("chain closed form equals the direct sum") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto chain = random_reversible(3, seed);
      for (Eigen::Index x = 0; x < 3; ++x) {
        const cd closed = conditional_mean_S(chain, MarkovStart{x}, 200, 1.3);
        cd direct = 0.0;
        Eigen::VectorXd v = chain.observable;
        for (int k = 1; k <= 200; ++k) {
          v = chain.kernel * v;
          direct += std::polar(1.0, k * 1.3) * v(x);
        }
        CHECK(std::abs(closed - direct) < 1e-10);
      }
    }
  }
}

TEST_CASE("projection equals a_j xi_0") {
  Eigen::VectorXd past(3);
  past << 2.0, -1.0, 0.5;
  Eigen::VectorXd shifted = past;
  shifted(0) = 0.0;
  const Eigen::VectorXd full = conditional_means(ar1(), LinearPast{past}, 6);
  const Eigen::VectorXd rest = conditional_means(ar1(), LinearPast{shifted}, 6);
  for (Eigen::Index j = 1; j <= 6; ++j) {
    CHECK(full(j - 1) - rest(j - 1) ==
          doctest::Approx(projection_linear(ar1(), static_cast<std::size_t>(j)) * 2.0));
  }

  // brute-force conditional averaging over futures
  const QuenchedSampler sampler(ar1(), LinearPast{past}, 4);
  const int draws = 100'000;
  Eigen::VectorXd x3(draws);
  for (int r = 0; r < draws; ++r) {
    x3(r) = sampler.sample(derive_seed(4, "proj", r)).values(2);
  }
  const double se = std::sqrt(sample_variance(x3) / draws);
  CHECK(std::abs(mean(x3) - full(2)) < 3.0 * se);
}

TEST_CASE("telescoping identity") {
  SUBCASE("zero past") {
    const auto terms = telescoping_decomposition(ar1(), LinearPast{Eigen::VectorXd::Zero(2)}, 64, 1.0);
    CHECK(std::abs(terms.first) == 0.0);
    CHECK(std::abs(terms.middle) == 0.0);
    CHECK(std::abs(terms.last) == 0.0);
  }
  SUBCASE("AR(1) with unit past") {
    const auto terms = telescoping_decomposition(ar1(), LinearPast{Eigen::VectorXd::Ones(1)}, 64, 1.0);
    CHECK(terms.residual < 1e-10);
  }
  SUBCASE("two-state chain") {
    const auto terms = telescoping_decomposition(flip_chain(0.25), MarkovStart{0}, 64, 1.0);
    CHECK(terms.residual < 1e-10);
    CHECK(std::abs(terms.sum()) > 0.0);
  }
}

TEST_CASE("white noise has no approximation gap") {
  const auto gap = approximation_gap(white_noise(), LinearPast{Eigen::VectorXd::Ones(3)}, 128, 1.0, 200, 1);
  CHECK(gap.gap < 1e-24);
}

TEST_CASE("gap shrinks for geometric models") {
  for (const ProcessSpec &spec : {ProcessSpec{ar1()}, ProcessSpec{walk3()}}) {
    const QuenchedOrigin origin = std::holds_alternative<LinearProcess>(spec)
                                      ? QuenchedOrigin{LinearPast{Eigen::VectorXd::Constant(1, 5.0)}}
                                      : QuenchedOrigin{MarkovStart{0}};
    double previous = 1e300;
    double first = 0.0;
    for (Eigen::Index n : {256, 1024, 4096}) {
      const GapEstimate g = approximation_gap(spec, origin, n, 1.0, 2000, 17);
      if (n == 256) {
        first = g.gap;
      }
      CHECK(g.gap < previous);
      previous = g.gap;
    }
    CHECK(previous < first / 4.0);
  }
}

TEST_CASE("gap CSV header") {
  std::ostringstream out;
  write_gap_csv(out, {GapEstimate{256, 1.0, 0.5, 0.01, 3}}, 0xabcdef);
  CHECK(out.str().rfind("n,t,gap,stderr,model_hash,seed\n", 0) == 0);
  CHECK(out.str().find("256,1,0.5,") != std::string::npos);
}
