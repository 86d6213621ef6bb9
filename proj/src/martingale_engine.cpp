#include "qclt/martingale_engine.hpp"

#include <cmath>
#include <cstdio>

#include "qclt/fourier_stats.hpp"
#include "qclt/parallel.hpp"
#include "qclt/spec_io.hpp"
#include "qclt/spectral_oracle.hpp"

namespace qclt {

namespace {

using cd = std::complex<double>;

struct GaussianConditional {
  Eigen::VectorXd mean;
  Eigen::VectorXd variance;
};

GaussianConditional gaussian_conditional(const GaussianLRD &g, const GaussianPast &past,
                                         Eigen::Index n) {
  const Eigen::Index l = past.values.size();
  const Eigen::MatrixXd joint = lrd_covariance_matrix(g.alpha, n + l);
  const Eigen::MatrixXd pp = joint.topLeftCorner(l, l);
  const Eigen::MatrixXd fp = joint.bottomLeftCorner(n, l);
  Eigen::LDLT<Eigen::MatrixXd> ldlt(pp);
  GaussianConditional out;
  out.mean = fp * ldlt.solve(Eigen::VectorXd(past.values.reverse()));
  const Eigen::MatrixXd explained = fp * ldlt.solve(fp.transpose());
  out.variance = (Eigen::VectorXd::Ones(n) - explained.diagonal()).cwiseMax(0.0);
  return out;
}

} // namespace

double projection_linear(const LinearProcess &process, std::size_t lag) {
  return process.coeffs(lag);
}

std::complex<double> future_transfer(const LinearProcess &process, double t) {
  return transfer_function(process.coeffs, t) - process.coeffs(0);
}

Eigen::VectorXcd resolvent(const FiniteMarkovFn &chain, double t, double *residual) {
  const Eigen::Index m = chain.states();
  const Eigen::MatrixXcd system = Eigen::MatrixXcd::Identity(m, m) -
                                  std::polar(1.0, t) * chain.kernel.cast<cd>();
  const Eigen::VectorXcd h = chain.observable.cast<cd>();
  Eigen::PartialPivLU<Eigen::MatrixXcd> lu(system);
  if (!(lu.rcond() >= 1e-12)) {
    throw SingularResolventError("I - e^{it}Q is singular at t = " + std::to_string(t));
  }
  Eigen::VectorXcd g = lu.solve(h);
  g += lu.solve(h - system * g);
  if (residual != nullptr) {
    *residual = (h - system * g).cwiseAbs().maxCoeff();
  }
  return g;
}

MartingaleKernel make_kernel(const ProcessSpec &spec, double t) {
  MartingaleKernel kernel;
  kernel.t = t;
  if (const auto *p = std::get_if<LinearProcess>(&spec)) {
    LinearKernel lk;
    lk.future_transfer = future_transfer(*p, t);
    lk.full_transfer = p->coeffs(0) + lk.future_transfer;
    kernel.data = lk;
    return kernel;
  }
  if (const auto *m = as_markov(spec)) {
    MarkovKernel mk;
    mk.g = resolvent(*m, t, &mk.residual);
    mk.qg = m->kernel.cast<cd>() * mk.g;
    kernel.data = mk;
    return kernel;
  }
  throw std::domain_error("no martingale construction for process family " + family_name(spec));
}

std::complex<double> martingale_difference(const LinearKernel &kernel, double t, Eigen::Index k,
                                           double innovation) {
  return std::polar(1.0, static_cast<double>(k) * t) * kernel.full_transfer * innovation;
}

std::complex<double> martingale_difference(const MarkovKernel &kernel, double t, Eigen::Index k,
                                           Eigen::Index state, Eigen::Index next_state) {
  return std::polar(1.0, static_cast<double>(k + 1) * t) *
         (kernel.g(next_state) - kernel.qg(state));
}

Eigen::VectorXcd martingale_increments(const MartingaleKernel &kernel, const Trajectory &path) {
  const Eigen::Index n = path.values.size();
  Eigen::VectorXcd d(n);
  if (const auto *lk = std::get_if<LinearKernel>(&kernel.data)) {
    if (path.innovations.size() != n) {
      throw std::invalid_argument("trajectory carries no innovations");
    }
    for (Eigen::Index k = 1; k <= n; ++k) {
      d(k - 1) = martingale_difference(*lk, kernel.t, k, path.innovations(k - 1));
    }
    return d;
  }
  const auto &mk = std::get<MarkovKernel>(kernel.data);
  if (path.states.size() != static_cast<std::size_t>(n) + 2) {
    throw std::invalid_argument("trajectory carries no chain states");
  }
  for (Eigen::Index k = 1; k <= n; ++k) {
    const auto i = static_cast<std::size_t>(k);
    d(k - 1) = martingale_difference(mk, kernel.t, k, path.states[i], path.states[i + 1]);
  }
  return d;
}

Eigen::VectorXd conditional_means(const ProcessSpec &spec, const QuenchedOrigin &origin,
                                  Eigen::Index n) {
  validate_origin(spec, origin);
  Eigen::VectorXd means(n);
  if (const auto *p = std::get_if<LinearProcess>(&spec)) {
    const auto &past = std::get<LinearPast>(origin).innovations;
    for (Eigen::Index k = 1; k <= n; ++k) {
      double sum = 0.0;
      for (Eigen::Index m = 0; m < past.size(); ++m) {
        sum += p->coeffs(static_cast<std::size_t>(k + m)) * past(m);
      }
      means(k - 1) = sum;
    }
    return means;
  }
  if (const auto *m = as_markov(spec)) {
    const Eigen::Index x = std::get<MarkovStart>(origin).state;
    Eigen::VectorXd v = m->observable;
    for (Eigen::Index k = 1; k <= n; ++k) {
      v = m->kernel * v;
      means(k - 1) = v(x);
    }
    return means;
  }
  if (const auto *f = std::get_if<IteratedRandomFn>(&spec)) {
    if (f->observable != IrfObservable::identity) {
      throw std::domain_error("no closed-form conditional mean for a nonlinear IRF observable");
    }
    const double x0 = std::get<IrfStart>(origin).x0;
    for (Eigen::Index k = 1; k <= n; ++k) {
      means(k - 1) = std::pow(irf_mean_slope(*f), static_cast<double>(k)) * x0;
    }
    return means;
  }
  const auto &g = std::get<GaussianLRD>(spec);
  const GaussianConditional c = gaussian_conditional(g, std::get<GaussianPast>(origin), n);
  if (g.observable == LrdObservable::identity) {
    return c.mean;
  }
  return c.mean.cwiseAbs2() + c.variance - Eigen::VectorXd::Ones(n);
}

std::complex<double> conditional_mean_S_direct(const ProcessSpec &spec,
                                               const QuenchedOrigin &origin, Eigen::Index n,
                                               double t) {
  return dft(conditional_means(spec, origin, n), t);
}

std::complex<double> conditional_mean_S(const ProcessSpec &spec, const QuenchedOrigin &origin,
                                        Eigen::Index n, double t) {
  if (const auto *m = as_markov(spec)) {
    validate_origin(spec, origin);
    try {
      const Eigen::VectorXcd g = resolvent(*m, t);
      const Eigen::Index x = std::get<MarkovStart>(origin).state;
      // Q^{n+1} g by repeated squaring.
      Eigen::MatrixXd power = Eigen::MatrixXd::Identity(m->states(), m->states());
      Eigen::MatrixXd base = m->kernel;
      for (auto e = static_cast<std::uint64_t>(n + 1); e > 0; e >>= 1) {
        if ((e & 1U) != 0) {
          power = power * base;
        }
        base = base * base;
      }
      const cd first = std::polar(1.0, t) * (m->kernel.row(x).cast<cd>() * g)(0);
      const cd last =
          std::polar(1.0, static_cast<double>(n + 1) * t) * (power.row(x).cast<cd>() * g)(0);
      return first - last;
    } catch (const SingularResolventError &) {
      return conditional_mean_S_direct(spec, origin, n, t);
    }
  }
  return conditional_mean_S_direct(spec, origin, n, t);
}

Eigen::VectorXd markov_conditional_mean_norms(const FiniteMarkovFn &chain, double t,
                                              Eigen::Index count) {
  const Eigen::Index m = chain.states();
  Eigen::VectorXcd partial = Eigen::VectorXcd::Zero(m);
  Eigen::VectorXd v = chain.observable;
  Eigen::VectorXd norms(count);
  for (Eigen::Index k = 1; k <= count; ++k) {
    v = chain.kernel * v;
    partial += std::polar(1.0, static_cast<double>(k) * t) * v.cast<cd>();
    norms(k - 1) = std::sqrt(chain.stationary.dot(partial.cwiseAbs2()));
  }
  return norms;
}

double resolvent_norm(const FiniteMarkovFn &chain, const Eigen::VectorXcd &g) {
  return std::sqrt(chain.stationary.dot(g.cwiseAbs2()));
}

GapEstimate approximation_gap(const ProcessSpec &spec, const QuenchedOrigin &origin, Eigen::Index n,
                       double t, Eigen::Index replicates, std::uint64_t seed) {
  if (replicates < 2) {
    throw std::invalid_argument("approximation_gap needs at least 2 replicates");
  }
  const MartingaleKernel kernel = make_kernel(spec, t);
  const QuenchedSampler sampler(spec, origin, n);
  const cd centering = conditional_mean_S(spec, origin, n, t);
  std::vector<double> values(static_cast<std::size_t>(replicates));
  parallel_for(values.size(), [&](std::size_t r) {
    const Trajectory path = sampler.sample(derive_seed(seed, "approximation_gap", r));
    const cd s = dft(path.values, t);
    const cd m = martingale_increments(kernel, path).sum();
    values[r] = std::norm(s - centering - m) / static_cast<double>(n);
  });
  double mean = 0.0;
  for (double v : values) {
    mean += v;
  }
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) {
    var += (v - mean) * (v - mean);
  }
  var /= static_cast<double>(values.size() - 1);
  GapEstimate out;
  out.n = n;
  out.t = t;
  out.gap = mean;
  out.std_error = std::sqrt(var / static_cast<double>(values.size()));
  out.seed = seed;
  return out;
}

TelescopingTerms telescoping_decomposition(const ProcessSpec &spec, const QuenchedOrigin &origin,
                                           Eigen::Index n, double t) {
  const Eigen::VectorXd m = conditional_means(spec, origin, n);
  TelescopingTerms terms;
  terms.first = std::polar(1.0, t) * m(0);
  terms.last = -std::polar(1.0, static_cast<double>(n + 1) * t) * m(n - 1);
  terms.middle = 0.0;
  for (Eigen::Index k = 1; k < n; ++k) {
    terms.middle += std::polar(1.0, static_cast<double>(k + 1) * t) * (m(k) - m(k - 1));
  }
  const cd target = (1.0 - std::polar(1.0, t)) * conditional_mean_S(spec, origin, n, t);
  terms.residual = std::abs(terms.sum() - target);
  return terms;
}

void write_gap_csv(std::ostream &out, const std::vector<GapEstimate> &rows,
                   std::uint64_t model_hash) {
  out << "n,t,gap,stderr,model_hash,seed\n";
  char line[256];
  for (const auto &r : rows) {
    std::snprintf(line, sizeof line, "%lld,%.17g,%.17g,%.17g,%s,%llu\n",
                  static_cast<long long>(r.n), r.t, r.gap, r.std_error, hex64(model_hash).c_str(),
                  static_cast<unsigned long long>(r.seed));
    out << line;
  }
}

} // namespace qclt
