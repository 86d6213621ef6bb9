#ifndef QCLT_QUENCHED_MC_HPP
#define QCLT_QUENCHED_MC_HPP

#include <Eigen/Dense>
#include <yaml-cpp/yaml.h>

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qclt/fourier_stats.hpp"
#include "qclt/process_models.hpp"

namespace qclt {

enum class CenteringMode { none, conditional };
const char *centering_name(CenteringMode mode);

struct Tolerances {
  double ks = 0.04;
  double correlation = 0.07;
  double variance_rel = 0.10;
  double periodogram_mean_lo = 0.9;
  double periodogram_mean_hi = 1.1;
  double periodogram_ks = 0.05;
};

struct ExperimentConfig {
  ProcessSpec spec;
  /// Frozen past; nullopt draws one from the stationary past with the seed.
  std::optional<QuenchedOrigin> origin;
  FrequencyGrid grid;
  Eigen::Index n = 4096;
  Eigen::Index replicates = 2000;
  std::uint64_t seed = 0;
  /// none tests V_n, conditional tests W_n.
  CenteringMode centering = CenteringMode::none;
  Tolerances tolerances;
  bool allow_excluded = false;
};

void validate(const ExperimentConfig &config);

struct FrequencyResult {
  double t = 0.0;
  bool excluded = false;
  Eigen::Vector2d mean = Eigen::Vector2d::Zero();
  Eigen::Matrix2d covariance = Eigen::Matrix2d::Zero();
  double correlation = 0.0;
  /// sigma_t^2 and where it came from ("analytic" or "empirical").
  double sigma2 = 0.0;
  std::string sigma2_source;
  double target_variance = 0.0; ///< sigma_t^2 / 2 per component
  Eigen::Vector2d variance_ratio = Eigen::Vector2d::Zero();
  Eigen::Vector2d ks = Eigen::Vector2d::Zero();
  /// (1/n) mean over replicates of |S_n - E_0 S_n|^2
  double conditional_second_moment = 0.0;
  bool degenerate = false;
  bool has_periodogram = false;
  double periodogram_mean_ratio = 0.0;
  double periodogram_ks = 0.0;
  bool pass_ks = true;
  bool pass_correlation = true;
  bool pass_variance = true;
  bool pass_periodogram = true;

  bool passed() const { return pass_ks && pass_correlation && pass_variance && pass_periodogram; }
};

struct TestReport {
  std::vector<FrequencyResult> frequencies;
  // provenance
  std::uint64_t seed = 0;
  Eigen::Index replicates = 0;
  Eigen::Index n = 0;
  std::uint64_t spec_hash = 0;
  QuenchedOrigin origin;
  bool origin_drawn = false;
  CenteringMode centering = CenteringMode::none;
  Tolerances tolerances;
  double truncation_bias = 0.0;

  std::vector<std::string> failures;
  bool passed() const { return failures.empty(); }

  /// Per replicate and grid point: t, re_V, im_V, re_W, im_W, I.
  Eigen::MatrixXd raw;
};

/// Draws R futures from one origin and tests the quenched limit at every grid
/// point. Replicates may run on several threads; the report does not depend
/// on the thread count.
TestReport run_quenched(const ExperimentConfig &config);

void emit(YAML::Emitter &out, const TestReport &report);
void write_raw_csv(std::ostream &out, const TestReport &report);

struct DecayRow {
  Eigen::Index n = 0;
  double value = 0.0; ///< |E_0 S_n(t)| / sqrt(n)
  double ratio = 0.0; ///< value / previous value; NaN on the first row
};

struct DecayTable {
  double t = 0.0;
  std::vector<DecayRow> rows;
  /// Every ratio at most 1/sqrt(2) per quadrupling (or the values vanish).
  bool decays = false;
};

DecayTable centering_decay(const ProcessSpec &spec, const QuenchedOrigin &origin, double t,
                           const std::vector<Eigen::Index> &ladder);

struct GrowthRow {
  Eigen::Index n = 0;
  double normalized = 0.0; ///< E|S_n(t)|^2 / n, exact
  double factor = 0.0;     ///< normalized / previous normalized; NaN first
};

struct GrowthTable {
  double t = 0.0;
  std::vector<GrowthRow> rows;
  /// For the long-range dependent family at t = 0: (n2/n1)^{1 - alpha} per step.
  std::optional<double> expected_factor;
};

/// Exact E|S_n(t)|^2 / n across a ladder; exposes divergence where the
/// covariances are not summable.
GrowthTable variance_growth(const ProcessSpec &spec, double t,
                            const std::vector<Eigen::Index> &ladder);

void emit(YAML::Emitter &out, const DecayTable &table);
void emit(YAML::Emitter &out, const GrowthTable &table);

struct RaikovRow {
  Eigen::Index n = 0;
  double max_mean = 0.0; ///< mean over replicates of max_k |a Re D_k + b Im D_k| / sqrt(n)
  double max_se = 0.0;
  double sumsq_mean = 0.0; ///< mean of (1/n) sum_k (a Re D_k + b Im D_k)^2
  double sumsq_sd = 0.0;   ///< its spread across replicates
  double target = 0.0;     ///< (a^2 + b^2) E|D|^2 / 2
  double sumsq_rel_error = 0.0;
};

struct RaikovDiagnostics {
  double a = 0.0;
  double b = 0.0;
  std::vector<RaikovRow> rows;
  bool max_strictly_decreasing = false;
  /// log-log slope of max_mean against n
  double max_exponent = 0.0;
};

/// increments is R x n_max with D_k(t) per replicate; the ladder entries must
/// not exceed n_max. second_moment is E|D_k|^2.
RaikovDiagnostics raikov_diagnostics(const Eigen::MatrixXcd &increments, double a, double b,
                                     const std::vector<Eigen::Index> &ladder,
                                     double second_moment);

void emit(YAML::Emitter &out, const RaikovDiagnostics &diagnostics);

} // namespace qclt

#endif // QCLT_QUENCHED_MC_HPP
