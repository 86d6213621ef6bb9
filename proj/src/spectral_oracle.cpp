#include "qclt/spectral_oracle.hpp"

#include <cmath>
#include <cstdio>
#include <limits>

#include "qclt/fourier_stats.hpp"

namespace qclt {

const char *method_name(SpectralMethod method) {
  switch (method) {
  case SpectralMethod::analytic:
    return "analytic";
  case SpectralMethod::covariance_series:
    return "covariance-series";
  case SpectralMethod::empirical:
    return "empirical";
  }
  return "analytic";
}

std::complex<double> transfer_function(const CoefficientSequence &coeffs, double t,
                                       double *error) {
  const std::size_t p = coeffs.prefix_size();
  std::complex<double> sum{0.0, 0.0};
  for (std::size_t j = 0; j < p; ++j) {
    sum += coeffs.prefix[j] * std::polar(1.0, static_cast<double>(j) * t);
  }
  double bound = 0.0;
  switch (coeffs.rule) {
  case TailRule::none:
    break;
  case TailRule::geometric: {
    const std::complex<double> z = coeffs.ratio * std::polar(1.0, t);
    sum += coeffs.scale * std::pow(z, static_cast<double>(p)) / (1.0 - z);
    break;
  }
  case TailRule::power: {
    const std::size_t stop = p + (std::size_t{1} << 22);
    std::complex<double> phase = std::polar(1.0, static_cast<double>(p) * t);
    const std::complex<double> step = std::polar(1.0, t);
    for (std::size_t j = p; j < stop; ++j) {
      if ((j - p) % 4096 == 0) {
        phase = std::polar(1.0, static_cast<double>(j) * t);
      }
      sum += coeffs(j) * phase;
      phase *= step;
    }
    // Dirichlet test for a monotone tail, or absolute summation when p > 1.
    bound = std::numeric_limits<double>::infinity();
    const double half_sine = std::abs(std::sin(t / 2.0));
    if (half_sine > 0.0) {
      bound = coeffs(stop) / half_sine;
    }
    if (coeffs.exponent > 1.0) {
      const double base = static_cast<double>(stop) - 1.0 + coeffs.shift;
      double l1 = coeffs.scale * std::pow(base, 1.0 - coeffs.exponent) / (coeffs.exponent - 1.0);
      if (coeffs.log_exponent != 0.0) {
        l1 *= std::pow(std::log(base), -coeffs.log_exponent);
      }
      bound = std::min(bound, l1);
    }
    break;
  }
  }
  if (error != nullptr) {
    *error = bound;
  }
  return sum;
}

SpectralEstimate spectral_density_linear(const LinearProcess &process, double t) {
  double tail = 0.0;
  const std::complex<double> transfer = transfer_function(process.coeffs, t, &tail);
  const double scale = process.innovation.variance / two_pi;
  SpectralEstimate out;
  out.t = t;
  out.f = scale * std::norm(transfer);
  out.sigma2 = two_pi * out.f;
  out.method = SpectralMethod::analytic;
  out.error_bound = scale * (2.0 * std::abs(transfer) * tail + tail * tail);
  if (!std::isfinite(out.error_bound)) {
    throw NonSummableError("transfer function tail does not converge at t = " +
                           std::to_string(t));
  }
  return out;
}

double second_largest_modulus(const FiniteMarkovFn &chain) {
  const Eigen::Index m = chain.states();
  const Eigen::MatrixXd centered =
      chain.kernel - Eigen::VectorXd::Ones(m) * chain.stationary.transpose();
  Eigen::EigenSolver<Eigen::MatrixXd> eig(centered, false);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

SpectralEstimate spectral_density_markov(const FiniteMarkovFn &chain, double t) {
  if (second_largest_modulus(chain) >= 1.0 - 1e-12) {
    throw NonSummableError("chain has a non-unit eigenvalue of modulus one; covariances are not "
                           "summable");
  }
  const Eigen::Index m = chain.states();
  const Eigen::MatrixXd centered =
      chain.kernel - Eigen::VectorXd::Ones(m) * chain.stationary.transpose();
  const std::complex<double> z = std::polar(1.0, -t);
  const Eigen::MatrixXcd step = z * centered.cast<std::complex<double>>();
  const Eigen::MatrixXcd system = Eigen::MatrixXcd::Identity(m, m) - step;
  const Eigen::VectorXcd h = chain.observable.cast<std::complex<double>>();
  // sum_{j>=1} z^j (Q - 1 pi)^j h
  const Eigen::VectorXcd series = system.partialPivLu().solve(step * h);
  const Eigen::VectorXd weighted = chain.stationary.cwiseProduct(chain.observable);
  const double c0 = weighted.dot(chain.observable);
  const std::complex<double> tail = weighted.cast<std::complex<double>>().dot(series);
  SpectralEstimate out;
  out.t = t;
  out.f = std::max(0.0, (c0 + 2.0 * tail.real()) / two_pi);
  out.sigma2 = two_pi * out.f;
  out.method = SpectralMethod::covariance_series;
  out.error_bound = 1e-12 * std::max(1.0, c0);
  return out;
}

std::optional<SpectralEstimate> spectral_density(const ProcessSpec &spec, double t) {
  if (const auto *p = std::get_if<LinearProcess>(&spec)) {
    return spectral_density_linear(*p, t);
  }
  if (const auto *m = as_markov(spec)) {
    return spectral_density_markov(*m, t);
  }
  if (const auto *f = std::get_if<IteratedRandomFn>(&spec)) {
    if (f->observable != IrfObservable::identity) {
      return std::nullopt;
    }
    // Affine recursion with identity observable: cov(l) = (E A)^l Var, an
    // AR(1)-type density with ratio E A.
    const Eigen::VectorXd c0 = autocovariances(spec, 1);
    const double r = irf_mean_slope(*f);
    SpectralEstimate out;
    out.t = t;
    out.f = c0(0) * (1.0 - r * r) / (two_pi * (1.0 - 2.0 * r * std::cos(t) + r * r));
    out.sigma2 = two_pi * out.f;
    out.method = SpectralMethod::analytic;
    return out;
  }
  return std::nullopt;
}

Eigen::VectorXd autocovariances(const ProcessSpec &spec, Eigen::Index count) {
  Eigen::VectorXd cov = Eigen::VectorXd::Zero(count);
  if (const auto *p = std::get_if<LinearProcess>(&spec)) {
    const auto &c = p->coeffs;
    const std::size_t w =
        std::max(c.prefix_size(), c.window(1e-17, std::size_t{1} << 20));
    const auto total = static_cast<Eigen::Index>(w) + count;
    Eigen::VectorXd a(total);
    for (Eigen::Index j = 0; j < total; ++j) {
      a(j) = c(static_cast<std::size_t>(j));
    }
    const auto head = static_cast<Eigen::Index>(w);
    for (Eigen::Index lag = 0; lag < count; ++lag) {
      double value = a.head(head).dot(a.segment(lag, head));
      if (c.rule == TailRule::geometric) {
        const double r2 = c.ratio * c.ratio;
        value += c.scale * c.scale * std::pow(c.ratio, static_cast<double>(lag)) *
                 std::pow(r2, static_cast<double>(w)) / (1.0 - r2);
      }
      cov(lag) = p->innovation.variance * value;
    }
    return cov;
  }
  if (const auto *m = as_markov(spec)) {
    Eigen::VectorXd v = m->observable;
    const Eigen::VectorXd weighted = m->stationary.cwiseProduct(m->observable);
    for (Eigen::Index lag = 0; lag < count; ++lag) {
      cov(lag) = weighted.dot(v);
      v = m->kernel * v;
    }
    return cov;
  }
  if (const auto *f = std::get_if<IteratedRandomFn>(&spec)) {
    if (f->observable != IrfObservable::identity) {
      throw std::domain_error("no closed-form covariance for a nonlinear IRF observable");
    }
    const double second = irf_slope_moment(*f, 2.0);
    if (!(second < 1.0)) {
      throw std::domain_error("IRF stationary variance is infinite (E A^2 >= 1)");
    }
    const double variance = f->noise.variance / (1.0 - second);
    for (Eigen::Index lag = 0; lag < count; ++lag) {
      cov(lag) = variance * std::pow(irf_mean_slope(*f), static_cast<double>(lag));
    }
    return cov;
  }
  const auto &g = std::get<GaussianLRD>(spec);
  for (Eigen::Index lag = 0; lag < count; ++lag) {
    const double r = lrd_covariance(g.alpha, static_cast<std::size_t>(lag));
    cov(lag) = g.observable == LrdObservable::identity ? r : 2.0 * r * r;
  }
  return cov;
}

double exact_variance_S(const ProcessSpec &spec, Eigen::Index n, double t) {
  if (n < 1) {
    throw std::invalid_argument("exact_variance_S requires n >= 1");
  }
  const Eigen::VectorXd cov = autocovariances(spec, n);
  const auto nd = static_cast<double>(n);
  double sum = 0.0;
  double compensation = 0.0;
  for (Eigen::Index lag = n - 1; lag >= 1; --lag) {
    const double term =
        2.0 * (nd - static_cast<double>(lag)) * cov(lag) * std::cos(static_cast<double>(lag) * t);
    const double y = term - compensation;
    const double s = sum + y;
    compensation = (s - sum) - y;
    sum = s;
  }
  return std::max(0.0, nd * cov(0) + sum);
}

double sigma2_extrapolated(const ProcessSpec &spec, double t, Eigen::Index n1, Eigen::Index n2) {
  const double v1 = exact_variance_S(spec, n1, t);
  const double v2 = exact_variance_S(spec, n2, t);
  // v(n) = n sigma^2 + b + o(1)
  return (v2 - v1) / static_cast<double>(n2 - n1);
}

void write_density_csv(std::ostream &out, const std::vector<SpectralEstimate> &rows) {
  out << "t,f,sigma2,method\n";
  char line[256];
  for (const auto &r : rows) {
    std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g,%s\n", r.t, r.f, r.sigma2,
                  method_name(r.method));
    out << line;
  }
}

} // namespace qclt
