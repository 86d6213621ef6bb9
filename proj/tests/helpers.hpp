#ifndef QCLT_TESTS_HELPERS_HPP
#define QCLT_TESTS_HELPERS_HPP

#include <Eigen/Dense>

#include <cstdint>

#include "qclt/process_models.hpp"
#include "qclt/rng.hpp"

namespace qclt::testing {

inline LinearProcess white_noise(InnovationKind kind = InnovationKind::normal,
                                 double variance = 1.0) {
  LinearProcess p;
  p.coeffs = CoefficientSequence::finite({1.0});
  p.innovation = {kind, variance};
  return p;
}

inline LinearProcess ar1(double rho = 0.5, double variance = 1.0) {
  LinearProcess p;
  p.coeffs = CoefficientSequence::geometric(rho);
  p.innovation = {InnovationKind::normal, variance};
  return p;
}

/// Symmetric flip with probability p and h = (+1, -1).
inline ReversibleMarkovFn flip_chain(double p) {
  ReversibleMarkovFn m;
  m.kernel.resize(2, 2);
  m.kernel << 1.0 - p, p, p, 1.0 - p;
  m.stationary = Eigen::Vector2d(0.5, 0.5);
  m.observable = Eigen::Vector2d(1.0, -1.0);
  return m;
}

/// Birth-death walk on {0, 1, 2}.
inline ReversibleMarkovFn walk3() {
  ReversibleMarkovFn m;
  m.kernel.resize(3, 3);
  m.kernel << 0.5, 0.5, 0.0, 0.25, 0.5, 0.25, 0.0, 0.5, 0.5;
  m.stationary = Eigen::Vector3d(0.25, 0.5, 0.25);
  m.observable = Eigen::Vector3d(-1.0, 0.0, 1.0);
  return m;
}

inline Eigen::VectorXd centered_observable(const Eigen::VectorXd &pi, Engine &engine) {
  Eigen::VectorXd h(pi.size());
  for (Eigen::Index i = 0; i < h.size(); ++i) {
    h(i) = standard_normal(engine);
  }
  h.array() -= pi.dot(h);
  return h;
}

/// Q_ij = w_ij / sum_j w_ij with symmetric positive weights is reversible
/// with pi proportional to the row sums.
inline ReversibleMarkovFn random_reversible(Eigen::Index states, std::uint64_t seed) {
  Engine engine = make_engine(seed, "random_reversible");
  Eigen::MatrixXd w(states, states);
  for (Eigen::Index i = 0; i < states; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      w(i, j) = w(j, i) = 0.05 + uniform01(engine);
    }
  }
  const Eigen::VectorXd rows = w.rowwise().sum();
  ReversibleMarkovFn m;
  m.kernel = rows.asDiagonal().inverse() * w;
  m.stationary = rows / rows.sum();
  m.observable = centered_observable(m.stationary, engine);
  return m;
}

inline FiniteMarkovFn random_chain(Eigen::Index states, std::uint64_t seed) {
  Engine engine = make_engine(seed, "random_chain");
  FiniteMarkovFn m;
  m.kernel.resize(states, states);
  for (Eigen::Index i = 0; i < states; ++i) {
    for (Eigen::Index j = 0; j < states; ++j) {
      m.kernel(i, j) = 0.05 + uniform01(engine);
    }
    m.kernel.row(i) /= m.kernel.row(i).sum();
  }
  m.stationary = stationary_distribution(m.kernel);
  m.observable = centered_observable(m.stationary, engine);
  return m;
}

} // namespace qclt::testing

#endif // QCLT_TESTS_HELPERS_HPP
