#ifndef QCLT_PROCESS_MODELS_HPP
#define QCLT_PROCESS_MODELS_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "qclt/rng.hpp"

namespace qclt {

/// Raised when a process description or an origin violates its invariants.
class ValidationError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

enum class InnovationKind { normal, uniform, rademacher };

/// Centered i.i.d. innovation law. A zero variance gives a degenerate
/// (deterministic) innovation.
struct InnovationDist {
  InnovationKind kind = InnovationKind::normal;
  double variance = 1.0;

  double stddev() const { return std::sqrt(variance); }
  double draw(Engine &engine) const;
  /// E|xi|^order, closed form for each family.
  double abs_moment(double order) const;
};

enum class TailRule { none, geometric, power };

/// Square-summable coefficients a_0, a_1, ... given by an explicit prefix
/// followed by an analytic tail rule starting at index prefix.size():
///   geometric: a_j = scale * ratio^j
///   power:     a_j = scale * (j + shift)^(-exponent) * log(j + shift)^(-log_exponent)
struct CoefficientSequence {
  std::vector<double> prefix;
  TailRule rule = TailRule::none;
  double scale = 0.0;
  double ratio = 0.0;
  double exponent = 0.0;
  double shift = 1.0;
  double log_exponent = 0.0;

  double operator()(std::size_t j) const;
  std::size_t prefix_size() const { return prefix.size(); }

  /// Upper bound on sum_{j >= from} a_j^2. Exact for the geometric rule.
  double tail_square_bound(std::size_t from) const;
  /// sum_j a_j^2 (exact for finite and geometric, to ~1e-12 relative for power).
  double square_sum() const;
  /// Smallest L with tail_square_bound(L) <= rel_tol * square_sum(), capped.
  std::size_t window(double rel_tol, std::size_t cap = std::size_t{1} << 26) const;

  static CoefficientSequence finite(std::vector<double> values);
  static CoefficientSequence geometric(double ratio, double scale = 1.0);
  static CoefficientSequence power(double exponent, double shift = 1.0,
                                   double scale = 1.0, double log_exponent = 0.0);
};

/// X_k = sum_{j>=0} a_j xi_{k-j}.
struct LinearProcess {
  CoefficientSequence coeffs;
  InnovationDist innovation;
  /// Hard cap on the truncation window used when sampling.
  std::size_t max_window = std::size_t{1} << 16;
};

/// X_k = h(xi_k) for a finite stationary Markov chain with kernel Q.
struct FiniteMarkovFn {
  Eigen::MatrixXd kernel;
  Eigen::VectorXd stationary;
  Eigen::VectorXd observable;

  Eigen::Index states() const { return kernel.rows(); }
};

/// Same data; additionally satisfies detailed balance.
struct ReversibleMarkovFn : FiniteMarkovFn {};

enum class IrfObservable { identity, tanh };

/// Random affine recursion xi_k = A_k xi_{k-1} + B_k with
/// A_k = slope + slope_jitter * U_k, U_k uniform on (-1, 1), B_k ~ noise.
/// The observable is odd, so X_k = h(xi_k) is centered.
struct IteratedRandomFn {
  double slope = 0.5;
  double slope_jitter = 0.0;
  InnovationDist noise;
  IrfObservable observable = IrfObservable::identity;
};

enum class LrdObservable { identity, square };

/// Stationary Gaussian sequence with cov(Y_0, Y_k) = (1 + k^2)^(-alpha/2),
/// observed through identity or y^2 - 1.
struct GaussianLRD {
  double alpha = 0.4;
  LrdObservable observable = LrdObservable::identity;
  std::size_t max_length = 4096;
};

using ProcessSpec = std::variant<LinearProcess, FiniteMarkovFn, ReversibleMarkovFn,
                                 IteratedRandomFn, GaussianLRD>;

/// Shared view of the two finite-chain variants, or nullptr.
const FiniteMarkovFn *as_markov(const ProcessSpec &spec);
std::string family_name(const ProcessSpec &spec);

/// Frozen past realizations.
struct LinearPast {
  Eigen::VectorXd innovations; ///< (xi_0, xi_{-1}, ..., xi_{-L+1})
};
struct MarkovStart {
  Eigen::Index state = 0;
};
struct IrfStart {
  double x0 = 0.0;
};
struct GaussianPast {
  Eigen::VectorXd values; ///< latent (Y_0, Y_{-1}, ..., Y_{-L+1})
};
using QuenchedOrigin = std::variant<LinearPast, MarkovStart, IrfStart, GaussianPast>;

std::string origin_name(const QuenchedOrigin &origin);

struct Trajectory {
  Eigen::VectorXd values; ///< X_1, ..., X_n
  /// Linear: xi_1..xi_n. IRF: B_1..B_n. Otherwise empty.
  Eigen::VectorXd innovations;
  /// IRF chain state or Gaussian latent Y_1..Y_n. Otherwise empty.
  Eigen::VectorXd latent;
  /// Markov chain states xi_0, ..., xi_{n+1}.
  std::vector<Eigen::Index> states;
  std::optional<QuenchedOrigin> origin; ///< nullopt for a stationary start
  std::uint64_t seed = 0;
  std::uint64_t spec_hash = 0;
  /// Relative variance neglected by the past-window truncation.
  double truncation_bias = 0.0;
};

// Checks every invariant of the spec; throws ValidationError naming the defect.
void validate(const ProcessSpec &spec);
void validate_origin(const ProcessSpec &spec, const QuenchedOrigin &origin);

/// Stationary law of a row-stochastic matrix (left null vector of Q - I).
Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd &kernel);
double detailed_balance_residual(const FiniteMarkovFn &chain);

// Closed-form moments of the random slope A of an affine IRF.
double irf_mean_log_slope(const IteratedRandomFn &irf);
double irf_slope_moment(const IteratedRandomFn &irf, double order);
double irf_mean_slope(const IteratedRandomFn &irf);
/// Contraction exponent beta in (0, 1] with E|A|^beta < 1, and that rate.
std::pair<double, double> irf_contraction(const IteratedRandomFn &irf);
double irf_observe(IrfObservable observable, double x);

double lrd_covariance(double alpha, std::size_t lag);
Eigen::MatrixXd lrd_covariance_matrix(double alpha, Eigen::Index n);
double lrd_min_eigenvalue(double alpha, Eigen::Index n);

/// Truncation window actually used for a linear process, and its bias.
std::size_t linear_window(const LinearProcess &process);
double linear_truncation_bias(const LinearProcess &process, std::size_t window);

/// Draws trajectories of fixed length under the stationary law. Holds the
/// precomputed factorization, so repeated sampling is cheap.
class StationarySampler {
public:
  StationarySampler(ProcessSpec spec, Eigen::Index n);
  Trajectory sample(std::uint64_t seed) const;
  const ProcessSpec &spec() const { return spec_; }

private:
  ProcessSpec spec_;
  Eigen::Index n_;
  std::uint64_t hash_;
  std::size_t window_ = 0;
  std::size_t burn_in_ = 0;
  Eigen::VectorXd coeffs_;
  Eigen::MatrixXd factor_;
};

/// Draws trajectories under the conditional law given a frozen origin.
class QuenchedSampler {
public:
  QuenchedSampler(ProcessSpec spec, QuenchedOrigin origin, Eigen::Index n);
  Trajectory sample(std::uint64_t seed) const;
  const ProcessSpec &spec() const { return spec_; }
  const QuenchedOrigin &origin() const { return origin_; }

private:
  ProcessSpec spec_;
  QuenchedOrigin origin_;
  Eigen::Index n_;
  std::uint64_t hash_;
  Eigen::VectorXd coeffs_;
  Eigen::VectorXd past_part_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd factor_;
};

Trajectory sample_stationary(const ProcessSpec &spec, Eigen::Index n, std::uint64_t seed);
Trajectory sample_quenched(const ProcessSpec &spec, const QuenchedOrigin &origin,
                           Eigen::Index n, std::uint64_t seed);
/// Samples a past from the stationary law of the past.
QuenchedOrigin draw_origin(const ProcessSpec &spec, std::uint64_t seed,
                           Eigen::Index gaussian_window = 16);

} // namespace qclt

#endif // QCLT_PROCESS_MODELS_HPP
