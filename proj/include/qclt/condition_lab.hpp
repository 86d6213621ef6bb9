#ifndef QCLT_CONDITION_LAB_HPP
#define QCLT_CONDITION_LAB_HPP

#include <Eigen/Dense>

#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "qclt/process_models.hpp"

namespace qclt {

enum class Verdict { holds_analytic, holds_numeric, fails_numeric, inconclusive };
const char *verdict_name(Verdict verdict);
bool verdict_holds(Verdict verdict);

struct SeriesCheckpoint {
  std::size_t k = 0;
  double term = 0.0;
  double partial = 0.0;
};

/// Certified bound on the remainder sum_{k > K} term_k.
struct TailCertificate {
  enum class Kind { analytic, comparison, divergent, none };
  Kind kind = Kind::none;
  std::string statement;
  std::function<double(std::size_t)> bound_after;
};

/// Partial sums of one nonnegative series with its tail certificate.
struct SeriesEvidence {
  std::string name;
  std::string majorant; ///< which majorant of the original condition was summed
  std::vector<SeriesCheckpoint> table;
  std::size_t terms = 0;
  double partial = 0.0;
  /// S_K - S_{K/10}; NaN when fewer than ten terms were summed.
  double last_decade_increment = 0.0;
  std::string tail_statement;
  double tail_bound = 0.0;
  Verdict verdict = Verdict::inconclusive;
};

/// Sums term(k) for k = first..last in fixed order with compensation.
/// Verdicts: holds-analytic for an analytic tail; holds-numeric for a
/// comparison tail when the last-decade increment is below 1e-6;
/// fails-numeric for a divergence certificate; inconclusive otherwise.
SeriesEvidence evaluate_series(std::string name, std::string majorant,
                               const std::function<double(std::size_t)> &term, std::size_t first,
                               std::size_t last, const TailCertificate &tail);

struct ConditionReport {
  std::string id;
  Verdict verdict = Verdict::inconclusive;
  std::vector<SeriesEvidence> series;
  std::vector<std::pair<std::string, double>> parameters;
  std::vector<std::string> notes;

  const SeriesEvidence *find(const std::string &name) const;
  double parameter(const std::string &key) const;
};

inline constexpr std::size_t default_series_terms = 1'000'000;

/// cond-16 through sum_k ||E_0 X_k||_2^2 / k.
ConditionReport check_sufcond(const ProcessSpec &spec,
                              std::size_t terms = default_series_terms);
/// cond-15 is an almost-sure series whose expectation is the cond-16 series, so it
/// inherits that verdict through the L^1 majorant.
ConditionReport cond15_from(const ConditionReport &cond16);
/// cond-14 through its L^2 majorant sum_k ||E_0(X_{k+1} - X_k)||_2^2 / k.
ConditionReport check_cond14(const ProcessSpec &spec,
                             std::size_t terms = default_series_terms);
/// Linear-process criterion sum_j (a_j - a_{j+1})^2 log j.
ConditionReport check_lin23(const LinearProcess &process,
                            std::size_t terms = default_series_terms);
/// cond-18: sum_k k^{-3/2} ||E_0 S_k(t)||_2.
ConditionReport check_condMW(const ProcessSpec &spec, double t,
                             std::size_t terms = default_series_terms);

struct IrfCheckOptions {
  std::size_t pairs = 20000;
  std::size_t grid_points = 24;
  double grid_min = 1e-6;
  std::size_t coupling_pairs = 2000;
  std::size_t coupling_steps = 24;
  double beta = 1.0;
  std::uint64_t seed = 0x5eed;
};
/// cond-irf20 with the exponential coupling, then cond-irf21. Returns two reports.
std::vector<ConditionReport> check_irf(const IteratedRandomFn &irf,
                                       const IrfCheckOptions &options = {});

/// Observable of a linear process with modulus of continuity
/// w(u, M) <= C u^gamma M^beta.
struct HolderObservable {
  enum class Kind { identity, square };
  Kind kind = Kind::identity;
  double gamma = 1.0;
  double beta = 0.0;
  double constant = 1.0;

  static HolderObservable identity() { return {Kind::identity, 1.0, 0.0, 1.0}; }
  /// x^2 - E x^2: |x^2 - y^2| <= |x - y| 2M.
  static HolderObservable square() { return {Kind::square, 1.0, 1.0, 2.0}; }
};

struct FlinCheckOptions {
  std::size_t lags = 12;
  std::size_t outer = 2000;
  std::size_t inner = 64;
  std::uint64_t seed = 0xf11;
};

/// ||P_0(h(X_j))||_2^2 in closed form for the identity and square observables.
double flin_projection_norm2(const LinearProcess &process, HolderObservable::Kind kind,
                             std::size_t j);

struct ProjectionEstimate {
  std::size_t j = 0;
  double closed_form = 0.0;
  double estimate = 0.0;
  double std_error = 0.0;
  double coupling_bound = 0.0; ///< E|h(X_j) - h(X'_j)|^2
  double coefficient_sq = 0.0; ///< a_j^2
};

/// Nested Monte Carlo of ||P_0(h(X_j))||_2^2 through the coupling
/// P_0 h(X_j) = E_0[h(X_j) - h(X'_j)], X'_j built with an independent copy of
/// xi_0.
std::vector<ProjectionEstimate> flin_projection_mc(const LinearProcess &process,
                                                   HolderObservable::Kind kind,
                                                   const FlinCheckOptions &options);

/// cond-flin26, with the summed projection norms reported alongside.
ConditionReport check_flin(const LinearProcess &process, const HolderObservable &observable,
                           const FlinCheckOptions &options = {},
                           std::size_t terms = default_series_terms);

/// alpha~(k) with the past reduced to sigma(xi_0): the largest
/// (1/2) sum_s pi(s) |P(X_k > x | xi_0 = s) - P(X_k > x)| over thresholds x.
double alpha_tilde(const FiniteMarkovFn &chain, std::size_t k);
/// alpha~(k) for k = 1..count.
Eigen::VectorXd alpha_tilde_sequence(const FiniteMarkovFn &chain, std::size_t count);

/// integral_0^a Q(u)^2 du for the upper-tail quantile Q of |X_0|.
double quantile_square_integral(const FiniteMarkovFn &chain, double a);

/// Both sides of the Rio comparison at lags 1..count.
struct RioRow {
  std::size_t k = 0;
  double lhs = 0.0;     ///< ||E_0 X_k||_2^2
  double literal = 0.0; ///< 2 int_0^{alpha~(k)} Q^2
  double doubled = 0.0; ///< 2 int_0^{2 alpha~(k)} Q^2
};
std::vector<RioRow> rio_comparison(const FiniteMarkovFn &chain, std::size_t count);

/// Total variation contraction d(k) = max_{s,s'} TV(Q^k(s,.), Q^k(s',.)),
/// which is submultiplicative.
struct ChainContraction {
  std::size_t k0 = 0;
  double eta = 1.0; ///< d(k0)
  bool contracting() const { return eta < 1.0; }
  /// d(k) <= eta^{floor(k / k0)}
  double bound(std::size_t k) const;
};
ChainContraction chain_contraction(const Eigen::MatrixXd &kernel, std::size_t max_k0 = 64);

/// cond-mix30 and the bounded-observable shortcut sum alpha~(k)/k.
ConditionReport check_mixing(const FiniteMarkovFn &chain,
                             std::size_t terms = default_series_terms);

/// All checks that apply to the spec.
std::vector<ConditionReport> check_all(const ProcessSpec &spec, double t);

/// Structured-text form of a list of reports.
std::string reports_to_yaml(const std::vector<ConditionReport> &reports);
/// Fixed-width verdict table for terminals.
std::string verdict_table(const std::vector<ConditionReport> &reports);

} // namespace qclt

#endif // QCLT_CONDITION_LAB_HPP
