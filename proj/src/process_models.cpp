#include "qclt/process_models.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "qclt/spec_io.hpp"

namespace qclt {

namespace {

template <class... Ts> struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts> Overloaded(Ts...) -> Overloaded<Ts...>;

std::string fmt(double x) {
  std::ostringstream out;
  out.precision(17);
  out << x;
  return out.str();
}

Eigen::Index draw_categorical(const Eigen::Ref<const Eigen::VectorXd> &probabilities,
                              Engine &engine) {
  const double u = uniform01(engine);
  double cumulative = 0.0;
  const Eigen::Index last = probabilities.size() - 1;
  for (Eigen::Index i = 0; i < last; ++i) {
    cumulative += probabilities(i);
    if (u < cumulative) {
      return i;
    }
  }
  return last;
}

Eigen::MatrixXd robust_lower_factor(const Eigen::MatrixXd &covariance) {
  Eigen::LLT<Eigen::MatrixXd> llt(covariance);
  if (llt.info() == Eigen::Success) {
    return llt.matrixL();
  }
  // Conditional covariances can be numerically singular; fall back to a
  // symmetric square root with clamped eigenvalues.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(covariance);
  if (eig.eigenvalues().minCoeff() < -1e-8 * std::max(1.0, eig.eigenvalues().maxCoeff())) {
    throw ValidationError("covariance matrix is not positive semidefinite (min eigenvalue " +
                          fmt(eig.eigenvalues().minCoeff()) + ")");
  }
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal();
}

double uniform_slope_integral(double a, double s, double order) {
  // (1/2s) * int_{a-s}^{a+s} |y|^order dy
  auto antiderivative = [order](double y) {
    return std::copysign(std::pow(std::abs(y), order + 1.0), y) / (order + 1.0);
  };
  return (antiderivative(a + s) - antiderivative(a - s)) / (2.0 * s);
}

double lrd_observe(LrdObservable observable, double y) {
  return observable == LrdObservable::identity ? y : y * y - 1.0;
}

} // namespace

// ---------------------------------------------------------------------------
// Innovations

double InnovationDist::draw(Engine &engine) const {
  switch (kind) {
  case InnovationKind::normal:
    return stddev() * standard_normal(engine);
  case InnovationKind::uniform:
    return std::sqrt(3.0 * variance) * (2.0 * uniform01(engine) - 1.0);
  case InnovationKind::rademacher:
    return (engine() >> 63) != 0 ? stddev() : -stddev();
  }
  return 0.0;
}

double InnovationDist::abs_moment(double order) const {
  if (order == 0.0) {
    return 1.0;
  }
  const double sigma = stddev();
  switch (kind) {
  case InnovationKind::normal:
    return std::pow(sigma, order) * std::pow(2.0, order / 2.0) *
           std::tgamma((order + 1.0) / 2.0) / std::sqrt(std::numbers::pi);
  case InnovationKind::uniform:
    return std::pow(std::sqrt(3.0) * sigma, order) / (order + 1.0);
  case InnovationKind::rademacher:
    return std::pow(sigma, order);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Coefficients

CoefficientSequence CoefficientSequence::finite(std::vector<double> values) {
  CoefficientSequence c;
  c.prefix = std::move(values);
  return c;
}

CoefficientSequence CoefficientSequence::geometric(double ratio, double scale) {
  CoefficientSequence c;
  c.rule = TailRule::geometric;
  c.ratio = ratio;
  c.scale = scale;
  return c;
}

CoefficientSequence CoefficientSequence::power(double exponent, double shift, double scale,
                                               double log_exponent) {
  CoefficientSequence c;
  c.rule = TailRule::power;
  c.exponent = exponent;
  c.shift = shift;
  c.scale = scale;
  c.log_exponent = log_exponent;
  return c;
}

double CoefficientSequence::operator()(std::size_t j) const {
  if (j < prefix.size()) {
    return prefix[j];
  }
  const auto x = static_cast<double>(j);
  switch (rule) {
  case TailRule::none:
    return 0.0;
  case TailRule::geometric:
    return scale * std::pow(ratio, x);
  case TailRule::power: {
    double value = scale * std::pow(x + shift, -exponent);
    if (log_exponent != 0.0) {
      value *= std::pow(std::log(x + shift), -log_exponent);
    }
    return value;
  }
  }
  return 0.0;
}

double CoefficientSequence::tail_square_bound(std::size_t from) const {
  const std::size_t p = prefix.size();
  double explicit_part = 0.0;
  for (std::size_t j = from; j < p; ++j) {
    explicit_part += prefix[j] * prefix[j];
  }
  const std::size_t start = std::max(from, p);
  switch (rule) {
  case TailRule::none:
    return explicit_part;
  case TailRule::geometric: {
    const double r2 = ratio * ratio;
    return explicit_part +
           scale * scale * std::pow(r2, static_cast<double>(start)) / (1.0 - r2);
  }
  case TailRule::power: {
    // Sum explicitly until the integrand is decreasing with log(x + shift) > 0,
    // then bound the rest by the integral from J - 1.
    std::size_t j = start;
    while (static_cast<double>(j) - 1.0 + shift <= 1.5) {
      const double a = (*this)(j);
      explicit_part += a * a;
      ++j;
    }
    const double base = static_cast<double>(j) - 1.0 + shift;
    double bound = scale * scale * std::pow(base, 1.0 - 2.0 * exponent) / (2.0 * exponent - 1.0);
    if (log_exponent != 0.0) {
      bound *= std::pow(std::log(base), -2.0 * log_exponent);
    }
    return explicit_part + bound;
  }
  }
  return explicit_part;
}

double CoefficientSequence::square_sum() const {
  if (rule != TailRule::power) {
    return tail_square_bound(0);
  }
  const std::size_t n = prefix.size() + (std::size_t{1} << 20);
  double sum = 0.0;
  double compensation = 0.0;
  for (std::size_t j = n; j-- > 0;) {
    const double a = (*this)(j);
    const double y = a * a - compensation;
    const double t = sum + y;
    compensation = (t - sum) - y;
    sum = t;
  }
  // Remainder lies between the integrals from n and from n - 1.
  const double upper = tail_square_bound(n);
  const double base = static_cast<double>(n) + shift;
  double lower = scale * scale * std::pow(base, 1.0 - 2.0 * exponent) / (2.0 * exponent - 1.0);
  if (log_exponent != 0.0) {
    lower *= std::pow(std::log(base), -2.0 * log_exponent);
  }
  return sum + 0.5 * (upper + lower);
}

std::size_t CoefficientSequence::window(double rel_tol, std::size_t cap) const {
  const double total = square_sum();
  if (total <= 0.0) {
    return 1;
  }
  const double target = rel_tol * total;
  for (std::size_t l = 1; l <= prefix.size(); ++l) {
    if (tail_square_bound(l) <= target) {
      return l;
    }
  }
  switch (rule) {
  case TailRule::none:
    return std::max<std::size_t>(prefix.size(), 1);
  case TailRule::geometric: {
    if (ratio == 0.0 || scale == 0.0) {
      return std::max<std::size_t>(prefix.size(), 1);
    }
    const double r2 = ratio * ratio;
    const double l = std::log(target * (1.0 - r2) / (scale * scale)) / std::log(r2);
    auto window = static_cast<std::size_t>(std::max(0.0, std::ceil(l)));
    window = std::max({window, prefix.size(), std::size_t{1}});
    while (window > 1 && tail_square_bound(window - 1) <= target) {
      --window;
    }
    while (tail_square_bound(window) > target && window < cap) {
      ++window;
    }
    return std::min(window, cap);
  }
  case TailRule::power: {
    std::size_t hi = std::max<std::size_t>(prefix.size(), 1);
    while (tail_square_bound(hi) > target) {
      if (hi >= cap) {
        return cap;
      }
      hi = std::min(cap, hi * 2);
    }
    std::size_t lo = hi / 2;
    while (lo + 1 < hi) {
      const std::size_t mid = lo + (hi - lo) / 2;
      (tail_square_bound(mid) <= target ? hi : lo) = mid;
    }
    return hi;
  }
  }
  return 1;
}

// ---------------------------------------------------------------------------
// Helpers

const FiniteMarkovFn *as_markov(const ProcessSpec &spec) {
  if (const auto *m = std::get_if<FiniteMarkovFn>(&spec)) {
    return m;
  }
  if (const auto *r = std::get_if<ReversibleMarkovFn>(&spec)) {
    return r;
  }
  return nullptr;
}

std::string family_name(const ProcessSpec &spec) {
  return std::visit(Overloaded{[](const LinearProcess &) { return std::string("linear"); },
                               [](const ReversibleMarkovFn &) {
                                 return std::string("reversible_markov");
                               },
                               [](const FiniteMarkovFn &) { return std::string("finite_markov"); },
                               [](const IteratedRandomFn &) {
                                 return std::string("iterated_random");
                               },
                               [](const GaussianLRD &) { return std::string("gaussian_lrd"); }},
                    spec);
}

std::string origin_name(const QuenchedOrigin &origin) {
  return std::visit(Overloaded{[](const LinearPast &) { return std::string("linear_past"); },
                               [](const MarkovStart &) { return std::string("markov_start"); },
                               [](const IrfStart &) { return std::string("irf_start"); },
                               [](const GaussianPast &) { return std::string("gaussian_past"); }},
                    origin);
}

Eigen::VectorXd stationary_distribution(const Eigen::MatrixXd &kernel) {
  const Eigen::Index m = kernel.rows();
  // Replace one balance equation by the normalization constraint.
  Eigen::MatrixXd system = kernel.transpose() - Eigen::MatrixXd::Identity(m, m);
  system.row(m - 1).setOnes();
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m);
  rhs(m - 1) = 1.0;
  Eigen::VectorXd pi = system.fullPivLu().solve(rhs);
  return pi.cwiseMax(0.0) / pi.cwiseMax(0.0).sum();
}

double detailed_balance_residual(const FiniteMarkovFn &chain) {
  const Eigen::MatrixXd flow = chain.stationary.asDiagonal() * chain.kernel;
  return (flow - flow.transpose()).cwiseAbs().maxCoeff();
}

double irf_mean_log_slope(const IteratedRandomFn &irf) {
  const double a = irf.slope;
  const double s = irf.slope_jitter;
  if (s == 0.0) {
    return a == 0.0 ? -std::numeric_limits<double>::infinity() : std::log(std::abs(a));
  }
  auto antiderivative = [](double y) { return y == 0.0 ? 0.0 : y * std::log(std::abs(y)) - y; };
  return (antiderivative(a + s) - antiderivative(a - s)) / (2.0 * s);
}

double irf_slope_moment(const IteratedRandomFn &irf, double order) {
  if (irf.slope_jitter == 0.0) {
    return std::pow(std::abs(irf.slope), order);
  }
  return uniform_slope_integral(irf.slope, irf.slope_jitter, order);
}

double irf_mean_slope(const IteratedRandomFn &irf) { return irf.slope; }

std::pair<double, double> irf_contraction(const IteratedRandomFn &irf) {
  if (!(irf_mean_log_slope(irf) < 0.0)) {
    throw ValidationError("iterated random function is not contractive: E log|A| = " +
                          fmt(irf_mean_log_slope(irf)) + " >= 0");
  }
  for (double beta = 1.0; beta > 1e-6; beta /= 2.0) {
    const double rate = irf_slope_moment(irf, beta);
    if (rate < 1.0) {
      return {beta, rate};
    }
  }
  throw ValidationError("no contraction exponent found for iterated random function");
}

double irf_observe(IrfObservable observable, double x) {
  return observable == IrfObservable::identity ? x : std::tanh(x);
}

double lrd_covariance(double alpha, std::size_t lag) {
  const auto k = static_cast<double>(lag);
  return std::pow(1.0 + k * k, -alpha / 2.0);
}

Eigen::MatrixXd lrd_covariance_matrix(double alpha, Eigen::Index n) {
  Eigen::VectorXd row(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    row(k) = lrd_covariance(alpha, static_cast<std::size_t>(k));
  }
  Eigen::MatrixXd cov(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      cov(i, j) = row(std::abs(i - j));
    }
  }
  return cov;
}

double lrd_min_eigenvalue(double alpha, Eigen::Index n) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(lrd_covariance_matrix(alpha, n),
                                                     Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

std::size_t linear_window(const LinearProcess &process) {
  const double total = process.coeffs.square_sum();
  if (total <= 0.0) {
    return 1;
  }
  double rel = 1e-8;
  if (process.innovation.variance > 0.0) {
    rel = std::min(rel, 1e-8 / (process.innovation.variance * total));
  }
  return std::min(process.coeffs.window(rel), process.max_window);
}

double linear_truncation_bias(const LinearProcess &process, std::size_t window) {
  const double total = process.coeffs.square_sum();
  return total > 0.0 ? process.coeffs.tail_square_bound(window) / total : 0.0;
}

// ---------------------------------------------------------------------------
// Validation

void validate(const ProcessSpec &spec) {
  auto check_innovation = [](const InnovationDist &d, const std::string &what) {
    if (!(d.variance >= 0.0) || !std::isfinite(d.variance)) {
      throw ValidationError(what + " variance must be finite and nonnegative, got " +
                            fmt(d.variance));
    }
  };
  std::visit(
      Overloaded{
          [&](const LinearProcess &p) {
            check_innovation(p.innovation, "innovation");
            const auto &c = p.coeffs;
            const auto first = static_cast<double>(c.prefix.size());
            switch (c.rule) {
            case TailRule::none:
              break;
            case TailRule::geometric:
              if (!(std::abs(c.ratio) < 1.0)) {
                throw ValidationError("geometric tail ratio must satisfy |ratio| < 1, got " +
                                      fmt(c.ratio));
              }
              break;
            case TailRule::power:
              if (!(c.exponent > 0.5)) {
                throw ValidationError("power tail exponent must exceed 1/2 for square "
                                      "summability, got " +
                                      fmt(c.exponent));
              }
              if (!(first + c.shift > (c.log_exponent != 0.0 ? 1.0 : 0.0))) {
                throw ValidationError("power tail shift makes the first tail coefficient "
                                      "undefined");
              }
              break;
            }
            if (p.max_window == 0) {
              throw ValidationError("max_window must be positive");
            }
          },
          [&](const FiniteMarkovFn &m) {
            const Eigen::Index k = m.kernel.rows();
            if (k == 0 || m.kernel.cols() != k) {
              throw ValidationError("kernel must be a nonempty square matrix");
            }
            if (m.stationary.size() != k || m.observable.size() != k) {
              throw ValidationError("stationary and observable vectors must have length " +
                                    std::to_string(k));
            }
            for (Eigen::Index i = 0; i < k; ++i) {
              if (m.kernel.row(i).minCoeff() < 0.0) {
                throw ValidationError("kernel row " + std::to_string(i) +
                                      " has a negative entry");
              }
              const double sum = m.kernel.row(i).sum();
              if (std::abs(sum - 1.0) > 1e-12) {
                throw ValidationError("kernel row " + std::to_string(i) + " sums to " +
                                      fmt(sum) + ", not 1");
              }
            }
            if (m.stationary.minCoeff() < 0.0 || std::abs(m.stationary.sum() - 1.0) > 1e-10) {
              throw ValidationError("stationary vector is not a probability vector");
            }
            const double balance =
                (m.stationary.transpose() * m.kernel - m.stationary.transpose()).cwiseAbs().maxCoeff();
            if (balance > 1e-10) {
              throw ValidationError("stationary vector is not invariant: |pi Q - pi| = " +
                                    fmt(balance));
            }
            const double mean = m.stationary.dot(m.observable);
            if (std::abs(mean) > 1e-10) {
              throw ValidationError("observable is not centered under pi: pi.h = " + fmt(mean));
            }
          },
          [&](const ReversibleMarkovFn &r) {
            validate(ProcessSpec{static_cast<const FiniteMarkovFn &>(r)});
            const double residual = detailed_balance_residual(r);
            if (residual >= 1e-10) {
              throw ValidationError("kernel violates detailed balance: residual " + fmt(residual));
            }
          },
          [&](const IteratedRandomFn &f) {
            check_innovation(f.noise, "noise");
            if (!(f.slope_jitter >= 0.0)) {
              throw ValidationError("slope_jitter must be nonnegative");
            }
            irf_contraction(f);
          },
          [&](const GaussianLRD &g) {
            if (!(g.alpha > 0.0 && g.alpha < 0.5)) {
              throw ValidationError("alpha must lie in (0, 1/2), got " + fmt(g.alpha));
            }
            if (g.max_length == 0) {
              throw ValidationError("max_length must be positive");
            }
            const double min_eig = lrd_min_eigenvalue(g.alpha, 64);
            if (min_eig < -1e-8) {
              throw ValidationError("covariance window is not positive semidefinite");
            }
          }},
      spec);
}

void validate_origin(const ProcessSpec &spec, const QuenchedOrigin &origin) {
  const bool ok = std::visit(
      Overloaded{[&](const LinearPast &past) {
                   if (past.innovations.size() == 0) {
                     throw ValidationError("linear past window must have length >= 1");
                   }
                   return std::holds_alternative<LinearProcess>(spec);
                 },
                 [&](const MarkovStart &start) {
                   const auto *m = as_markov(spec);
                   if (m != nullptr && (start.state < 0 || start.state >= m->states())) {
                     throw ValidationError("start state " + std::to_string(start.state) +
                                           " outside [0, " + std::to_string(m->states()) + ")");
                   }
                   return m != nullptr;
                 },
                 [&](const IrfStart &start) {
                   if (!std::isfinite(start.x0)) {
                     throw ValidationError("IRF start must be finite");
                   }
                   return std::holds_alternative<IteratedRandomFn>(spec);
                 },
                 [&](const GaussianPast &past) {
                   if (past.values.size() == 0) {
                     throw ValidationError("Gaussian past window must have length >= 1");
                   }
                   return std::holds_alternative<GaussianLRD>(spec);
                 }},
      origin);
  if (!ok) {
    throw ValidationError("origin kind " + origin_name(origin) + " does not match process " +
                          family_name(spec));
  }
}

// ---------------------------------------------------------------------------
// Sampling

StationarySampler::StationarySampler(ProcessSpec spec, Eigen::Index n)
    : spec_(std::move(spec)), n_(n), hash_(spec_hash(spec_)) {
  if (n_ < 1) {
    throw ValidationError("trajectory length must be >= 1");
  }
  validate(spec_);
  if (const auto *p = std::get_if<LinearProcess>(&spec_)) {
    window_ = linear_window(*p);
    coeffs_.resize(static_cast<Eigen::Index>(window_));
    for (std::size_t j = 0; j < window_; ++j) {
      coeffs_(static_cast<Eigen::Index>(j)) = p->coeffs(j);
    }
  } else if (const auto *f = std::get_if<IteratedRandomFn>(&spec_)) {
    const double rate = irf_contraction(*f).second;
    burn_in_ = rate <= 0.0 ? 1
                           : static_cast<std::size_t>(std::ceil(std::log(1e-8) / std::log(rate)));
  } else if (const auto *g = std::get_if<GaussianLRD>(&spec_)) {
    if (static_cast<std::size_t>(n_) > g->max_length) {
      throw ValidationError("Gaussian trajectory length " + std::to_string(n_) +
                            " exceeds max_length " + std::to_string(g->max_length));
    }
    Eigen::LLT<Eigen::MatrixXd> llt(lrd_covariance_matrix(g->alpha, n_));
    if (llt.info() != Eigen::Success) {
      throw ValidationError("Gaussian covariance window is not positive definite");
    }
    factor_ = llt.matrixL();
  }
}

Trajectory StationarySampler::sample(std::uint64_t seed) const {
  Trajectory out;
  out.seed = seed;
  out.spec_hash = hash_;
  out.values.resize(n_);
  Engine engine = make_engine(seed, "sample_stationary");
  std::visit(
      Overloaded{
          [&](const LinearProcess &p) {
            const auto w = static_cast<Eigen::Index>(window_);
            Eigen::VectorXd noise(n_ + w - 1);
            for (Eigen::Index i = 0; i < noise.size(); ++i) {
              noise(i) = p.innovation.draw(engine);
            }
            // noise(w - 1 + k - 1) holds xi_k.
            for (Eigen::Index k = 0; k < n_; ++k) {
              out.values(k) = coeffs_.dot(noise.segment(k, w).reverse());
            }
            out.innovations = noise.tail(n_);
            out.truncation_bias = linear_truncation_bias(p, window_);
          },
          [&](const FiniteMarkovFn &m) {
            out.states.resize(static_cast<std::size_t>(n_) + 2);
            out.states[0] = draw_categorical(m.stationary, engine);
            for (std::size_t k = 1; k < out.states.size(); ++k) {
              out.states[k] = draw_categorical(m.kernel.row(out.states[k - 1]).transpose(), engine);
            }
            for (Eigen::Index k = 0; k < n_; ++k) {
              out.values(k) = m.observable(out.states[static_cast<std::size_t>(k) + 1]);
            }
          },
          [&](const ReversibleMarkovFn &r) {
            const auto &m = static_cast<const FiniteMarkovFn &>(r);
            out.states.resize(static_cast<std::size_t>(n_) + 2);
            out.states[0] = draw_categorical(m.stationary, engine);
            for (std::size_t k = 1; k < out.states.size(); ++k) {
              out.states[k] = draw_categorical(m.kernel.row(out.states[k - 1]).transpose(), engine);
            }
            for (Eigen::Index k = 0; k < n_; ++k) {
              out.values(k) = m.observable(out.states[static_cast<std::size_t>(k) + 1]);
            }
          },
          [&](const IteratedRandomFn &f) {
            auto step = [&](double x, double &noise) {
              const double a =
                  f.slope_jitter == 0.0 ? f.slope
                                        : f.slope + f.slope_jitter * (2.0 * uniform01(engine) - 1.0);
              noise = f.noise.draw(engine);
              return a * x + noise;
            };
            double x = 0.0;
            double noise = 0.0;
            for (std::size_t b = 0; b < burn_in_; ++b) {
              x = step(x, noise);
            }
            out.innovations.resize(n_);
            out.latent.resize(n_);
            for (Eigen::Index k = 0; k < n_; ++k) {
              x = step(x, noise);
              out.innovations(k) = noise;
              out.latent(k) = x;
              out.values(k) = irf_observe(f.observable, x);
            }
          },
          [&](const GaussianLRD &g) {
            Eigen::VectorXd z(n_);
            for (Eigen::Index k = 0; k < n_; ++k) {
              z(k) = standard_normal(engine);
            }
            out.latent = factor_ * z;
            out.values = out.latent.unaryExpr([&](double y) { return lrd_observe(g.observable, y); });
          }},
      spec_);
  return out;
}

QuenchedSampler::QuenchedSampler(ProcessSpec spec, QuenchedOrigin origin, Eigen::Index n)
    : spec_(std::move(spec)), origin_(std::move(origin)), n_(n), hash_(spec_hash(spec_)) {
  if (n_ < 1) {
    throw ValidationError("trajectory length must be >= 1");
  }
  validate(spec_);
  validate_origin(spec_, origin_);
  if (const auto *p = std::get_if<LinearProcess>(&spec_)) {
    const std::size_t window = linear_window(*p);
    const auto used = static_cast<Eigen::Index>(std::min<std::size_t>(window, static_cast<std::size_t>(n_)));
    coeffs_.resize(used);
    for (Eigen::Index j = 0; j < used; ++j) {
      coeffs_(j) = p->coeffs(static_cast<std::size_t>(j));
    }
    const auto &past = std::get<LinearPast>(origin_).innovations;
    past_part_ = Eigen::VectorXd::Zero(n_);
    for (Eigen::Index k = 1; k <= n_; ++k) {
      double sum = 0.0;
      for (Eigen::Index m = 0; m < past.size(); ++m) {
        sum += p->coeffs(static_cast<std::size_t>(k + m)) * past(m);
      }
      past_part_(k - 1) = sum;
    }
  } else if (const auto *g = std::get_if<GaussianLRD>(&spec_)) {
    const auto &past = std::get<GaussianPast>(origin_).values;
    const Eigen::Index l = past.size();
    if (static_cast<std::size_t>(n_ + l) > g->max_length) {
      throw ValidationError("Gaussian past plus future length exceeds max_length");
    }
    const Eigen::MatrixXd joint = lrd_covariance_matrix(g->alpha, n_ + l);
    // Time order in the joint matrix: Y_{-l+1}, ..., Y_0, Y_1, ..., Y_n.
    const Eigen::MatrixXd pp = joint.topLeftCorner(l, l);
    const Eigen::MatrixXd fp = joint.bottomLeftCorner(n_, l);
    const Eigen::MatrixXd ff = joint.bottomRightCorner(n_, n_);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(pp);
    const Eigen::VectorXd past_in_time_order = past.reverse();
    mean_ = fp * ldlt.solve(past_in_time_order);
    const Eigen::MatrixXd conditional = ff - fp * ldlt.solve(fp.transpose());
    factor_ = robust_lower_factor(0.5 * (conditional + conditional.transpose()));
  }
}

Trajectory QuenchedSampler::sample(std::uint64_t seed) const {
  Trajectory out;
  out.seed = seed;
  out.spec_hash = hash_;
  out.origin = origin_;
  out.values.resize(n_);
  Engine engine = make_engine(seed, "sample_quenched");
  auto run_chain = [&](const FiniteMarkovFn &m) {
    out.states.resize(static_cast<std::size_t>(n_) + 2);
    out.states[0] = std::get<MarkovStart>(origin_).state;
    for (std::size_t k = 1; k < out.states.size(); ++k) {
      out.states[k] = draw_categorical(m.kernel.row(out.states[k - 1]).transpose(), engine);
    }
    for (Eigen::Index k = 0; k < n_; ++k) {
      out.values(k) = m.observable(out.states[static_cast<std::size_t>(k) + 1]);
    }
  };
  std::visit(
      Overloaded{
          [&](const LinearProcess &p) {
            out.innovations.resize(n_);
            for (Eigen::Index k = 0; k < n_; ++k) {
              out.innovations(k) = p.innovation.draw(engine);
            }
            const Eigen::Index w = coeffs_.size();
            for (Eigen::Index k = 0; k < n_; ++k) {
              const Eigen::Index terms = std::min(k + 1, w);
              out.values(k) =
                  past_part_(k) +
                  coeffs_.head(terms).dot(out.innovations.segment(k + 1 - terms, terms).reverse());
            }
            out.truncation_bias = linear_truncation_bias(p, static_cast<std::size_t>(w));
          },
          [&](const FiniteMarkovFn &m) { run_chain(m); },
          [&](const ReversibleMarkovFn &r) { run_chain(r); },
          [&](const IteratedRandomFn &f) {
            double x = std::get<IrfStart>(origin_).x0;
            out.innovations.resize(n_);
            out.latent.resize(n_);
            for (Eigen::Index k = 0; k < n_; ++k) {
              const double a =
                  f.slope_jitter == 0.0 ? f.slope
                                        : f.slope + f.slope_jitter * (2.0 * uniform01(engine) - 1.0);
              const double noise = f.noise.draw(engine);
              x = a * x + noise;
              out.innovations(k) = noise;
              out.latent(k) = x;
              out.values(k) = irf_observe(f.observable, x);
            }
          },
          [&](const GaussianLRD &g) {
            Eigen::VectorXd z(n_);
            for (Eigen::Index k = 0; k < n_; ++k) {
              z(k) = standard_normal(engine);
            }
            out.latent = mean_ + factor_ * z;
            out.values = out.latent.unaryExpr([&](double y) { return lrd_observe(g.observable, y); });
          }},
      spec_);
  return out;
}

Trajectory sample_stationary(const ProcessSpec &spec, Eigen::Index n, std::uint64_t seed) {
  return StationarySampler(spec, n).sample(seed);
}

Trajectory sample_quenched(const ProcessSpec &spec, const QuenchedOrigin &origin, Eigen::Index n,
                           std::uint64_t seed) {
  return QuenchedSampler(spec, origin, n).sample(seed);
}

QuenchedOrigin draw_origin(const ProcessSpec &spec, std::uint64_t seed,
                           Eigen::Index gaussian_window) {
  validate(spec);
  Engine engine = make_engine(seed, "draw_origin");
  return std::visit(
      Overloaded{
          [&](const LinearProcess &p) -> QuenchedOrigin {
            const auto window = static_cast<Eigen::Index>(linear_window(p));
            LinearPast past;
            past.innovations.resize(window);
            for (Eigen::Index m = 0; m < window; ++m) {
              past.innovations(m) = p.innovation.draw(engine);
            }
            return past;
          },
          [&](const FiniteMarkovFn &m) -> QuenchedOrigin {
            return MarkovStart{draw_categorical(m.stationary, engine)};
          },
          [&](const ReversibleMarkovFn &m) -> QuenchedOrigin {
            return MarkovStart{draw_categorical(m.stationary, engine)};
          },
          [&](const IteratedRandomFn &) -> QuenchedOrigin {
            const Trajectory t = sample_stationary(spec, 1, engine());
            return IrfStart{t.latent(0)};
          },
          [&](const GaussianLRD &) -> QuenchedOrigin {
            const Trajectory t = sample_stationary(spec, gaussian_window, engine());
            return GaussianPast{t.latent.reverse()};
          }},
      spec);
}

} // namespace qclt
