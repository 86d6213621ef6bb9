#ifndef QCLT_STATS_HPP
#define QCLT_STATS_HPP

#include <Eigen/Dense>

#include <vector>

namespace qclt {

/// Neumaier-compensated accumulator. Summation order is the call order, so a
/// fixed order gives bit-identical results.
class CompensatedSum {
public:
  void add(double x);
  double value() const { return sum_ + compensation_; }

private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

double mean(const Eigen::Ref<const Eigen::VectorXd> &x);
/// Unbiased sample variance; 0 for fewer than two points.
double sample_variance(const Eigen::Ref<const Eigen::VectorXd> &x);

/// Unbiased covariance of the columns of an R x 2 sample.
Eigen::Matrix2d sample_covariance(const Eigen::Ref<const Eigen::MatrixX2d> &pairs);
/// Pearson correlation; 0 when either column is constant.
double correlation(const Eigen::Ref<const Eigen::MatrixX2d> &pairs);

double normal_cdf(double x, double variance);

/// sup_x |F_emp(x) - F(x)| against N(0, variance). A zero variance compares
/// with the point mass at 0.
double ks_normal(std::vector<double> sample, double variance);
/// sup_x |F_emp(x) - F(x)| against the exponential law with mean 1.
double ks_exponential(std::vector<double> sample);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};
/// Ordinary least squares y = intercept + slope x.
LinearFit least_squares(const Eigen::Ref<const Eigen::VectorXd> &x,
                        const Eigen::Ref<const Eigen::VectorXd> &y);

} // namespace qclt

#endif // QCLT_STATS_HPP
