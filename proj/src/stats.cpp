#include "qclt/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace qclt {

void CompensatedSum::add(double x) {
  const double t = sum_ + x;
  if (std::abs(sum_) >= std::abs(x)) {
    compensation_ += (sum_ - t) + x;
  } else {
    compensation_ += (x - t) + sum_;
  }
  sum_ = t;
}

double mean(const Eigen::Ref<const Eigen::VectorXd> &x) {
  if (x.size() == 0) {
    throw std::invalid_argument("mean of an empty sample");
  }
  CompensatedSum s;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    s.add(x(i));
  }
  return s.value() / static_cast<double>(x.size());
}

double sample_variance(const Eigen::Ref<const Eigen::VectorXd> &x) {
  if (x.size() < 2) {
    return 0.0;
  }
  const double m = mean(x);
  CompensatedSum s;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    s.add((x(i) - m) * (x(i) - m));
  }
  return s.value() / static_cast<double>(x.size() - 1);
}

Eigen::Matrix2d sample_covariance(const Eigen::Ref<const Eigen::MatrixX2d> &pairs) {
  const Eigen::Index r = pairs.rows();
  Eigen::Matrix2d cov = Eigen::Matrix2d::Zero();
  if (r < 2) {
    return cov;
  }
  const Eigen::Vector2d m(mean(pairs.col(0)), mean(pairs.col(1)));
  for (int a = 0; a < 2; ++a) {
    for (int b = a; b < 2; ++b) {
      CompensatedSum s;
      for (Eigen::Index i = 0; i < r; ++i) {
        s.add((pairs(i, a) - m(a)) * (pairs(i, b) - m(b)));
      }
      cov(a, b) = cov(b, a) = s.value() / static_cast<double>(r - 1);
    }
  }
  return cov;
}

double correlation(const Eigen::Ref<const Eigen::MatrixX2d> &pairs) {
  const Eigen::Matrix2d cov = sample_covariance(pairs);
  const double denom = std::sqrt(cov(0, 0) * cov(1, 1));
  return denom > 0.0 ? cov(0, 1) / denom : 0.0;
}

double normal_cdf(double x, double variance) {
  if (variance <= 0.0) {
    return x >= 0.0 ? 1.0 : 0.0;
  }
  return 0.5 * std::erfc(-x / std::sqrt(2.0 * variance));
}

namespace {

template <class Cdf> double ks_distance(std::vector<double> sample, Cdf cdf) {
  if (sample.empty()) {
    throw std::invalid_argument("KS distance of an empty sample");
  }
  std::sort(sample.begin(), sample.end());
  const auto n = static_cast<double>(sample.size());
  double d = 0.0;
  for (std::size_t i = 0; i < sample.size(); ++i) {
    const double f = cdf(sample[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return d;
}

} // namespace

double ks_normal(std::vector<double> sample, double variance) {
  if (variance == 0.0 && !sample.empty()) {
    // sup |F_emp - 1{x >= 0}| is attained just left of 0 or at 0.
    const auto below = std::count_if(sample.begin(), sample.end(), [](double v) { return v < 0.0; });
    const auto above = std::count_if(sample.begin(), sample.end(), [](double v) { return v > 0.0; });
    return static_cast<double>(std::max(below, above)) / static_cast<double>(sample.size());
  }
  return ks_distance(std::move(sample), [variance](double x) { return normal_cdf(x, variance); });
}

double ks_exponential(std::vector<double> sample) {
  return ks_distance(std::move(sample),
                     [](double x) { return x <= 0.0 ? 0.0 : -std::expm1(-x); });
}

LinearFit least_squares(const Eigen::Ref<const Eigen::VectorXd> &x,
                        const Eigen::Ref<const Eigen::VectorXd> &y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw std::invalid_argument("least squares needs two or more paired points");
  }
  const double mx = mean(x);
  const double my = mean(y);
  const Eigen::ArrayXd dx = x.array() - mx;
  const Eigen::ArrayXd dy = y.array() - my;
  const double sxx = (dx * dx).sum();
  LinearFit fit;
  fit.slope = sxx > 0.0 ? (dx * dy).sum() / sxx : 0.0;
  fit.intercept = my - fit.slope * mx;
  const double syy = (dy * dy).sum();
  const double sse = (dy - fit.slope * dx).square().sum();
  fit.r_squared = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return fit;
}

} // namespace qclt
