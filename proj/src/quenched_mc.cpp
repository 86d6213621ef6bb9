#include "qclt/quenched_mc.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

#include "qclt/martingale_engine.hpp"
#include "qclt/parallel.hpp"
#include "qclt/spec_io.hpp"
#include "qclt/spectral_oracle.hpp"
#include "qclt/stats.hpp"

namespace qclt {

namespace {

constexpr double nan = std::numeric_limits<double>::quiet_NaN();

std::string describe(double t, const char *what, double value, const char *cmp, double limit) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "t=%.6g: %s %.6g %s %.6g", t, what, value, cmp, limit);
  return buf;
}

std::optional<double> analytic_density(const ProcessSpec &spec, double t) {
  try {
    if (auto est = spectral_density(spec, t)) {
      return est->f;
    }
  } catch (const std::domain_error &) {
  }
  return std::nullopt;
}

} // namespace

const char *centering_name(CenteringMode mode) {
  return mode == CenteringMode::none ? "none" : "conditional";
}

void validate(const ExperimentConfig &config) {
  validate(config.spec);
  if (config.replicates < 100) {
    throw ValidationError("replicates must be at least 100");
  }
  if (config.n < 64) {
    throw ValidationError("n must be at least 64");
  }
  if (config.grid.size() == 0) {
    throw ValidationError("frequency grid is empty");
  }
  if (config.grid.any_excluded() && !config.allow_excluded) {
    throw ValidationError("frequency grid contains an excluded point {pi/2, pi, 3pi/2}; set "
                          "allow_excluded to override");
  }
  if (config.origin) {
    validate_origin(config.spec, *config.origin);
  }
}

TestReport run_quenched(const ExperimentConfig &config) {
  validate(config);
  TestReport report;
  report.seed = config.seed;
  report.replicates = config.replicates;
  report.n = config.n;
  report.spec_hash = spec_hash(config.spec);
  report.centering = config.centering;
  report.tolerances = config.tolerances;
  report.origin_drawn = !config.origin.has_value();
  report.origin = config.origin ? *config.origin
                                : draw_origin(config.spec, derive_seed(config.seed, "origin"));

  const std::size_t g = config.grid.size();
  const auto r = static_cast<std::size_t>(config.replicates);

  // E_0 S_n(t) per grid point when the family supports it.
  std::optional<std::vector<std::complex<double>>> centering;
  try {
    std::vector<std::complex<double>> c(g);
    for (std::size_t i = 0; i < g; ++i) {
      c[i] = conditional_mean_S(config.spec, report.origin, config.n, config.grid.points[i]);
    }
    centering = std::move(c);
  } catch (const std::domain_error &) {
    if (config.centering == CenteringMode::conditional) {
      throw;
    }
  }

  const QuenchedSampler sampler(config.spec, report.origin, config.n);
  std::vector<std::vector<FourierSample>> samples(r);
  std::vector<double> bias(r, 0.0);
  parallel_for(r, [&](std::size_t i) {
    const Trajectory path = sampler.sample(derive_seed(config.seed, "run_quenched", i));
    samples[i] = fourier_batch(path.values, config.grid, centering);
    bias[i] = path.truncation_bias;
  });
  report.truncation_bias = r > 0 ? bias.front() : 0.0;

  report.raw.resize(static_cast<Eigen::Index>(r * g), 6);
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < g; ++j) {
      const auto &s = samples[i][j];
      report.raw.row(static_cast<Eigen::Index>(i * g + j)) << s.t, s.V(0), s.V(1), s.W(0), s.W(1), s.I;
    }
  }

  const Tolerances &tol = config.tolerances;
  for (std::size_t j = 0; j < g; ++j) {
    FrequencyResult fr;
    fr.t = config.grid.points[j];
    fr.excluded = config.grid.excluded[j];
    Eigen::MatrixX2d pairs(static_cast<Eigen::Index>(r), 2);
    Eigen::VectorXd centered_sq(static_cast<Eigen::Index>(r));
    Eigen::VectorXd periodogram(static_cast<Eigen::Index>(r));
    for (std::size_t i = 0; i < r; ++i) {
      const auto &s = samples[i][j];
      const Eigen::Vector2d &x = config.centering == CenteringMode::none ? s.V : s.W;
      pairs.row(static_cast<Eigen::Index>(i)) = x.transpose();
      centered_sq(static_cast<Eigen::Index>(i)) = s.W.squaredNorm();
      periodogram(static_cast<Eigen::Index>(i)) = s.I;
    }
    fr.mean << mean(pairs.col(0)), mean(pairs.col(1));
    fr.covariance = sample_covariance(pairs);
    fr.correlation = correlation(pairs);
    if (centering) {
      fr.conditional_second_moment = mean(centered_sq);
    } else {
      fr.conditional_second_moment = fr.covariance.trace();
    }
    const std::optional<double> f = analytic_density(config.spec, fr.t);
    if (f) {
      fr.sigma2 = two_pi * *f;
      fr.sigma2_source = "analytic";
    } else {
      fr.sigma2 = fr.conditional_second_moment;
      fr.sigma2_source = "empirical";
    }
    fr.target_variance = fr.sigma2 / 2.0;
    fr.degenerate = !(fr.target_variance > 0.0);
    if (fr.degenerate) {
      const bool zero = fr.covariance.cwiseAbs().maxCoeff() == 0.0;
      fr.pass_variance = zero;
      if (!zero) {
        report.failures.push_back(describe(fr.t, "degenerate target but covariance", fr.covariance.cwiseAbs().maxCoeff(), "!=", 0.0));
      }
    } else {
      for (int c = 0; c < 2; ++c) {
        std::vector<double> col(pairs.col(c).data(), pairs.col(c).data() + pairs.rows());
        fr.ks(c) = ks_normal(std::move(col), fr.target_variance);
        fr.variance_ratio(c) = fr.covariance(c, c) / fr.target_variance;
      }
      fr.pass_ks = fr.ks.maxCoeff() < tol.ks;
      fr.pass_correlation = std::abs(fr.correlation) < tol.correlation;
      fr.pass_variance = (fr.variance_ratio.array() - 1.0).abs().maxCoeff() <= tol.variance_rel;
      if (!fr.pass_ks) {
        report.failures.push_back(describe(fr.t, "KS distance", fr.ks.maxCoeff(), ">=", tol.ks));
      }
      if (!fr.pass_correlation) {
        report.failures.push_back(describe(fr.t, "|correlation|", std::abs(fr.correlation), ">=", tol.correlation));
      }
      if (!fr.pass_variance) {
        report.failures.push_back(describe(fr.t, "variance ratio deviation",
                                           (fr.variance_ratio.array() - 1.0).abs().maxCoeff(), ">", tol.variance_rel));
      }
    }
    if (f && *f > 0.0) {
      fr.has_periodogram = true;
      const Eigen::VectorXd ratio = periodogram / *f;
      fr.periodogram_mean_ratio = mean(ratio);
      fr.periodogram_ks = ks_exponential(std::vector<double>(ratio.data(), ratio.data() + ratio.size()));
      fr.pass_periodogram = fr.periodogram_mean_ratio >= tol.periodogram_mean_lo &&
                            fr.periodogram_mean_ratio <= tol.periodogram_mean_hi &&
                            fr.periodogram_ks < tol.periodogram_ks;
      if (!fr.pass_periodogram) {
        report.failures.push_back(describe(fr.t, "periodogram mean ratio", fr.periodogram_mean_ratio, "/ KS", fr.periodogram_ks));
      }
    }
    report.frequencies.push_back(fr);
  }
  return report;
}

namespace {

void emit_vec(YAML::Emitter &out, const Eigen::Vector2d &v) {
  out << YAML::Flow << YAML::BeginSeq << v(0) << v(1) << YAML::EndSeq;
}

} // namespace

void emit(YAML::Emitter &out, const TestReport &report) {
  out << YAML::BeginMap;
  out << YAML::Key << "provenance" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "seed" << YAML::Value << report.seed;
  out << YAML::Key << "replicates" << YAML::Value << report.replicates;
  out << YAML::Key << "n" << YAML::Value << report.n;
  out << YAML::Key << "spec_hash" << YAML::Value << hex64(report.spec_hash);
  out << YAML::Key << "origin_drawn" << YAML::Value << report.origin_drawn;
  out << YAML::Key << "origin" << YAML::Value;
  emit_origin(out, report.origin);
  out << YAML::Key << "centering" << YAML::Value << centering_name(report.centering);
  out << YAML::Key << "truncation_bias" << YAML::Value << report.truncation_bias;
  out << YAML::EndMap;
  const Tolerances &tol = report.tolerances;
  out << YAML::Key << "tolerances" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "ks" << YAML::Value << tol.ks;
  out << YAML::Key << "correlation" << YAML::Value << tol.correlation;
  out << YAML::Key << "variance_rel" << YAML::Value << tol.variance_rel;
  out << YAML::Key << "periodogram_mean" << YAML::Value << YAML::Flow << YAML::BeginSeq
      << tol.periodogram_mean_lo << tol.periodogram_mean_hi << YAML::EndSeq;
  out << YAML::Key << "periodogram_ks" << YAML::Value << tol.periodogram_ks;
  out << YAML::EndMap;
  out << YAML::Key << "frequencies" << YAML::Value << YAML::BeginSeq;
  for (const auto &f : report.frequencies) {
    out << YAML::BeginMap;
    out << YAML::Key << "t" << YAML::Value << f.t;
    out << YAML::Key << "excluded" << YAML::Value << f.excluded;
    out << YAML::Key << "mean" << YAML::Value;
    emit_vec(out, f.mean);
    out << YAML::Key << "covariance" << YAML::Value << YAML::Flow << YAML::BeginSeq << f.covariance(0, 0)
        << f.covariance(0, 1) << f.covariance(1, 1) << YAML::EndSeq;
    out << YAML::Key << "correlation" << YAML::Value << f.correlation;
    out << YAML::Key << "sigma2" << YAML::Value << f.sigma2;
    out << YAML::Key << "sigma2_source" << YAML::Value << f.sigma2_source;
    out << YAML::Key << "target_variance" << YAML::Value << f.target_variance;
    out << YAML::Key << "variance_ratio" << YAML::Value;
    emit_vec(out, f.variance_ratio);
    out << YAML::Key << "ks" << YAML::Value;
    emit_vec(out, f.ks);
    out << YAML::Key << "conditional_second_moment" << YAML::Value << f.conditional_second_moment;
    out << YAML::Key << "degenerate" << YAML::Value << f.degenerate;
    if (f.has_periodogram) {
      out << YAML::Key << "periodogram" << YAML::Value << YAML::BeginMap;
      out << YAML::Key << "mean_ratio" << YAML::Value << f.periodogram_mean_ratio;
      out << YAML::Key << "ks_exponential" << YAML::Value << f.periodogram_ks;
      out << YAML::EndMap;
    }
    out << YAML::Key << "pass" << YAML::Value << YAML::Flow << YAML::BeginMap;
    out << YAML::Key << "ks" << YAML::Value << f.pass_ks;
    out << YAML::Key << "correlation" << YAML::Value << f.pass_correlation;
    out << YAML::Key << "variance" << YAML::Value << f.pass_variance;
    out << YAML::Key << "periodogram" << YAML::Value << f.pass_periodogram;
    out << YAML::EndMap;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  out << YAML::Key << "passed" << YAML::Value << report.passed();
  out << YAML::Key << "failures" << YAML::Value << YAML::BeginSeq;
  for (const auto &s : report.failures) {
    out << s;
  }
  out << YAML::EndSeq;
  out << YAML::EndMap;
}

void write_raw_csv(std::ostream &out, const TestReport &report) {
  out << "t,re_V,im_V,re_W,im_W,I\n";
  char line[256];
  for (Eigen::Index i = 0; i < report.raw.rows(); ++i) {
    const auto row = report.raw.row(i);
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", row(0), row(1), row(2),
                  row(3), row(4), row(5));
    out << line;
  }
}

DecayTable centering_decay(const ProcessSpec &spec, const QuenchedOrigin &origin, double t,
                           const std::vector<Eigen::Index> &ladder) {
  DecayTable table;
  table.t = t;
  bool decays = true;
  for (Eigen::Index n : ladder) {
    DecayRow row;
    row.n = n;
    row.value = std::abs(conditional_mean_S(spec, origin, n, t)) / std::sqrt(static_cast<double>(n));
    if (table.rows.empty()) {
      row.ratio = nan;
    } else {
      const double prev = table.rows.back().value;
      row.ratio = prev > 0.0 ? row.value / prev : (row.value == 0.0 ? 0.0 : nan);
      // one factor sqrt(2) per quadrupling of n
      const double steps = std::log(static_cast<double>(n) / static_cast<double>(table.rows.back().n)) /
                           std::log(4.0);
      const double allowed = std::pow(2.0, -0.5 * steps) + 1e-12;
      if (prev > 0.0 && !(row.ratio <= allowed)) {
        decays = false;
      }
      if (prev == 0.0 && row.value != 0.0) {
        decays = false;
      }
    }
    table.rows.push_back(row);
  }
  table.decays = decays;
  return table;
}

GrowthTable variance_growth(const ProcessSpec &spec, double t, const std::vector<Eigen::Index> &ladder) {
  GrowthTable table;
  table.t = t;
  for (Eigen::Index n : ladder) {
    GrowthRow row;
    row.n = n;
    row.normalized = exact_variance_S(spec, n, t) / static_cast<double>(n);
    row.factor = table.rows.empty() ? nan : row.normalized / table.rows.back().normalized;
    table.rows.push_back(row);
  }
  if (const auto *g = std::get_if<GaussianLRD>(&spec);
      g != nullptr && g->observable == LrdObservable::identity && t == 0.0 && ladder.size() >= 2) {
    table.expected_factor = std::pow(static_cast<double>(ladder[1]) / static_cast<double>(ladder[0]), 1.0 - g->alpha);
  }
  return table;
}

void emit(YAML::Emitter &out, const DecayTable &table) {
  out << YAML::BeginMap;
  out << YAML::Key << "t" << YAML::Value << table.t;
  out << YAML::Key << "decays" << YAML::Value << table.decays;
  out << YAML::Key << "rows" << YAML::Value << YAML::BeginSeq;
  for (const auto &r : table.rows) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "n" << YAML::Value << r.n << YAML::Key << "value"
        << YAML::Value << r.value << YAML::Key << "ratio" << YAML::Value << r.ratio << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
}

void emit(YAML::Emitter &out, const GrowthTable &table) {
  out << YAML::BeginMap;
  out << YAML::Key << "t" << YAML::Value << table.t;
  if (table.expected_factor) {
    out << YAML::Key << "expected_factor" << YAML::Value << *table.expected_factor;
  }
  out << YAML::Key << "rows" << YAML::Value << YAML::BeginSeq;
  for (const auto &r : table.rows) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "n" << YAML::Value << r.n << YAML::Key
        << "normalized_variance" << YAML::Value << r.normalized << YAML::Key << "factor" << YAML::Value
        << r.factor << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
}

RaikovDiagnostics raikov_diagnostics(const Eigen::MatrixXcd &increments, double a, double b,
                                     const std::vector<Eigen::Index> &ladder, double second_moment) {
  if (ladder.size() < 2) {
    throw std::invalid_argument("raikov_diagnostics needs at least two ladder points");
  }
  const Eigen::Index r = increments.rows();
  if (r < 2) {
    throw std::invalid_argument("raikov_diagnostics needs at least two replicates");
  }
  RaikovDiagnostics out;
  out.a = a;
  out.b = b;
  const Eigen::MatrixXd proj = a * increments.real() + b * increments.imag();
  const double target = 0.5 * (a * a + b * b) * second_moment;
  for (Eigen::Index n : ladder) {
    if (n < 1 || n > increments.cols()) {
      throw std::invalid_argument("ladder entry exceeds the number of increments");
    }
    Eigen::VectorXd maxima(r);
    Eigen::VectorXd sums(r);
    const double sqrt_n = std::sqrt(static_cast<double>(n));
    for (Eigen::Index i = 0; i < r; ++i) {
      const auto row = proj.row(i).head(n);
      maxima(i) = row.cwiseAbs().maxCoeff() / sqrt_n;
      sums(i) = row.squaredNorm() / static_cast<double>(n);
    }
    RaikovRow row;
    row.n = n;
    row.max_mean = mean(maxima);
    row.max_se = std::sqrt(sample_variance(maxima) / static_cast<double>(r));
    row.sumsq_mean = mean(sums);
    row.sumsq_sd = std::sqrt(sample_variance(sums));
    row.target = target;
    row.sumsq_rel_error = target > 0.0 ? std::abs(row.sumsq_mean / target - 1.0) : std::abs(row.sumsq_mean);
    out.rows.push_back(row);
  }
  out.max_strictly_decreasing = true;
  for (std::size_t i = 1; i < out.rows.size(); ++i) {
    out.max_strictly_decreasing = out.max_strictly_decreasing && out.rows[i].max_mean < out.rows[i - 1].max_mean;
  }
  const auto &first = out.rows.front();
  const auto &last = out.rows.back();
  if (first.max_mean > 0.0 && last.max_mean > 0.0) {
    out.max_exponent = std::log(last.max_mean / first.max_mean) /
                       std::log(static_cast<double>(last.n) / static_cast<double>(first.n));
  } else {
    out.max_exponent = 0.0;
  }
  return out;
}

void emit(YAML::Emitter &out, const RaikovDiagnostics &d) {
  out << YAML::BeginMap;
  out << YAML::Key << "a" << YAML::Value << d.a;
  out << YAML::Key << "b" << YAML::Value << d.b;
  out << YAML::Key << "max_strictly_decreasing" << YAML::Value << d.max_strictly_decreasing;
  out << YAML::Key << "max_exponent" << YAML::Value << d.max_exponent;
  out << YAML::Key << "rows" << YAML::Value << YAML::BeginSeq;
  for (const auto &r : d.rows) {
    out << YAML::Flow << YAML::BeginMap << YAML::Key << "n" << YAML::Value << r.n << YAML::Key << "max_mean"
        << YAML::Value << r.max_mean << YAML::Key << "max_se" << YAML::Value << r.max_se << YAML::Key
        << "sumsq_mean" << YAML::Value << r.sumsq_mean << YAML::Key << "sumsq_sd" << YAML::Value << r.sumsq_sd
        << YAML::Key << "target" << YAML::Value << r.target << YAML::Key << "sumsq_rel_error"
        << YAML::Value << r.sumsq_rel_error << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
}

} // namespace qclt
