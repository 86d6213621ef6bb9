#ifndef QCLT_SPECTRAL_ORACLE_HPP
#define QCLT_SPECTRAL_ORACLE_HPP

#include <Eigen/Dense>

#include <complex>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

#include "qclt/process_models.hpp"

namespace qclt {

/// The covariance series of the process is not absolutely summable (periodic
/// or reducible chain, long-range dependence at t = 0).
class NonSummableError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

enum class SpectralMethod { analytic, covariance_series, empirical };
const char *method_name(SpectralMethod method);

struct SpectralEstimate {
  double t = 0.0;
  double f = 0.0;      ///< spectral density
  double sigma2 = 0.0; ///< 2 pi f under the regular route
  SpectralMethod method = SpectralMethod::analytic;
  double error_bound = 0.0; ///< absolute error bound on f
};

/// sum_{j>=0} a_j e^{ijt}; `error` receives a bound on the neglected tail.
std::complex<double> transfer_function(const CoefficientSequence &coeffs, double t,
                                       double *error = nullptr);

/// f(t) = sigma^2 / (2 pi) |sum_j a_j e^{ijt}|^2.
SpectralEstimate spectral_density_linear(const LinearProcess &process, double t);

/// f(t) = (1 / 2 pi) sum_{j in Z} cov(X_0, X_j) e^{-ijt}, summed in closed form
/// through the resolvent of Q - 1 pi^T. Throws NonSummableError when a
/// non-unit eigenvalue of Q has modulus one.
SpectralEstimate spectral_density_markov(const FiniteMarkovFn &chain, double t);

/// Dispatch over families; nullopt where no analytic density is provided
/// (long-range dependent Gaussian, nonlinear IRF observables).
std::optional<SpectralEstimate> spectral_density(const ProcessSpec &spec, double t);

/// Largest modulus among the eigenvalues of Q other than the unit eigenvalue.
double second_largest_modulus(const FiniteMarkovFn &chain);

/// cov(X_0, X_lag) for lag = 0, ..., count - 1. Throws std::domain_error when
/// the family/observable has no closed form.
Eigen::VectorXd autocovariances(const ProcessSpec &spec, Eigen::Index count);

/// E|S_n(t)|^2 = sum_{|l| < n} (n - |l|) e^{ilt} cov(l), exactly.
double exact_variance_S(const ProcessSpec &spec, Eigen::Index n, double t);

/// Limit of E|S_n(t)|^2 / n estimated from two lengths by removing the
/// leading 1/n correction.
double sigma2_extrapolated(const ProcessSpec &spec, double t, Eigen::Index n1, Eigen::Index n2);

void write_density_csv(std::ostream &out, const std::vector<SpectralEstimate> &rows);

} // namespace qclt

#endif // QCLT_SPECTRAL_ORACLE_HPP
