#ifndef QCLT_MARTINGALE_ENGINE_HPP
#define QCLT_MARTINGALE_ENGINE_HPP

#include <Eigen/Dense>

#include <complex>
#include <cstdint>
#include <ostream>
#include <stdexcept>
#include <variant>
#include <vector>

#include "qclt/process_models.hpp"

namespace qclt {

/// I - e^{it} Q is numerically singular at the requested frequency.
class SingularResolventError : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

/// Martingale data of a causal linear process at frequency t.
/// future_transfer is c(t) = sum_{j>=1} e^{ijt} a_j; the increments use
/// full_transfer = a_0 + c(t), so that D_k(t) = e^{ikt} full_transfer xi_k.
struct LinearKernel {
  std::complex<double> future_transfer;
  std::complex<double> full_transfer;
};

/// Solution g of h = g - e^{it} Q g and the image Q g.
struct MarkovKernel {
  Eigen::VectorXcd g;
  Eigen::VectorXcd qg;
  double residual = 0.0;
};

struct MartingaleKernel {
  double t = 0.0;
  std::variant<LinearKernel, MarkovKernel> data;
};

/// Coefficient of xi_0 in P_0 X_j for a causal linear process, i.e. a_j.
double projection_linear(const LinearProcess &process, std::size_t lag);

std::complex<double> future_transfer(const LinearProcess &process, double t);

/// Solves (I - e^{it} Q) g = h by dense LU with one step of iterative
/// refinement. Throws SingularResolventError when the reciprocal condition
/// estimate falls below 1e-12.
Eigen::VectorXcd resolvent(const FiniteMarkovFn &chain, double t, double *residual = nullptr);

MartingaleKernel make_kernel(const ProcessSpec &spec, double t);

/// Linear increment D_k(t) = e^{ikt} (a_0 + c(t)) xi_k.
std::complex<double> martingale_difference(const LinearKernel &kernel, double t, Eigen::Index k,
                                           double innovation);
/// Markov increment D_k(t) = e^{i(k+1)t} [g(x_{k+1}) - (Q g)(x_k)].
std::complex<double> martingale_difference(const MarkovKernel &kernel, double t, Eigen::Index k,
                                           Eigen::Index state, Eigen::Index next_state);

/// D_1(t), ..., D_n(t) along a sampled trajectory.
Eigen::VectorXcd martingale_increments(const MartingaleKernel &kernel, const Trajectory &path);

/// E_0 X_k for k = 1, ..., n given the frozen origin.
Eigen::VectorXd conditional_means(const ProcessSpec &spec, const QuenchedOrigin &origin,
                                  Eigen::Index n);

/// E_0 S_n(t). Finite chains use the resolvent identity
/// e^{it} (Qg)(x) - e^{i(n+1)t} (Q^{n+1} g)(x) when the resolvent exists.
std::complex<double> conditional_mean_S(const ProcessSpec &spec, const QuenchedOrigin &origin,
                                        Eigen::Index n, double t);
/// sum_{k=1}^n e^{ikt} E_0 X_k.
std::complex<double> conditional_mean_S_direct(const ProcessSpec &spec,
                                               const QuenchedOrigin &origin, Eigen::Index n,
                                               double t);

/// ||E_0 S_k(t)||_2 for k = 1..count with the start drawn from pi.
Eigen::VectorXd markov_conditional_mean_norms(const FiniteMarkovFn &chain, double t,
                                              Eigen::Index count);
/// ||g||_{L^2(pi)}
double resolvent_norm(const FiniteMarkovFn &chain, const Eigen::VectorXcd &g);

struct GapEstimate {
  Eigen::Index n = 0;
  double t = 0.0;
  double gap = 0.0;
  double std_error = 0.0;
  std::uint64_t seed = 0;
};

/// Monte Carlo estimate of (1/n) E_0 |S_n - E_0 S_n - M_n|^2 over R futures.
GapEstimate approximation_gap(const ProcessSpec &spec, const QuenchedOrigin &origin, Eigen::Index n,
                       double t, Eigen::Index replicates, std::uint64_t seed);

/// (1 - e^{it}) E_0 S_n(t) = first + last + middle with
/// first = e^{it} E_0 X_1, last = -e^{i(n+1)t} E_0 X_n and
/// middle = sum_{k=1}^{n-1} e^{i(k+1)t} E_0 (X_{k+1} - X_k).
struct TelescopingTerms {
  std::complex<double> first;
  std::complex<double> last;
  std::complex<double> middle;
  /// |first + last + middle - (1 - e^{it}) conditional_mean_S|
  double residual = 0.0;

  std::complex<double> sum() const { return first + last + middle; }
};

TelescopingTerms telescoping_decomposition(const ProcessSpec &spec, const QuenchedOrigin &origin,
                                           Eigen::Index n, double t);

void write_gap_csv(std::ostream &out, const std::vector<GapEstimate> &rows,
                   std::uint64_t model_hash);

} // namespace qclt

#endif // QCLT_MARTINGALE_ENGINE_HPP
