#ifndef QCLT_FOURIER_STATS_HPP
#define QCLT_FOURIER_STATS_HPP

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <vector>

namespace qclt {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Steps between re-synchronizations of the phase recurrence.
inline constexpr Eigen::Index phase_resync_interval = 4096;

/// Finite Fourier transform sum_{k=1}^n e^{ikt} x_k.
///
/// The phase e^{ikt} advances by complex rotation and is reset to the exact
/// exponential every phase_resync_interval steps, which keeps the phase error
/// bounded for n up to 2^20. Accepts real or complex Eigen vectors.
template <typename Derived>
std::complex<double> dft(const Eigen::DenseBase<Derived> &values, double t) {
  const Eigen::Index n = values.size();
  if (n == 0) {
    throw std::invalid_argument("dft of an empty sequence");
  }
  const std::complex<double> step = std::polar(1.0, t);
  std::complex<double> phase = step;
  std::complex<double> sum{0.0, 0.0};
  for (Eigen::Index k = 0; k < n; ++k) {
    if (k % phase_resync_interval == 0) {
      phase = std::polar(1.0, static_cast<double>(k + 1) * t);
    }
    sum += phase * std::complex<double>(values.derived().coeff(k));
    phase *= step;
  }
  return sum;
}

/// Periodogram |S_n(t)|^2 / (2 pi n).
template <typename Derived> double periodogram(const Eigen::DenseBase<Derived> &values, double t) {
  const std::complex<double> s = dft(values, t);
  return std::norm(s) / (two_pi * static_cast<double>(values.size()));
}

enum class GridKind { uniform_random, fourier, explicit_list };

/// Frequencies in (0, 2 pi); excluded[i] marks points where e^{-2it} is real,
/// that is t in {pi/2, pi, 3pi/2}.
struct FrequencyGrid {
  std::vector<double> points;
  std::vector<bool> excluded;
  GridKind kind = GridKind::explicit_list;

  std::size_t size() const { return points.size(); }
  bool any_excluded() const;

  static FrequencyGrid explicit_points(std::vector<double> points);
  /// 2 pi j / n for j = 1, ..., n - 1.
  static FrequencyGrid fourier(Eigen::Index n);
  static FrequencyGrid uniform_random(std::size_t count, std::uint64_t seed);
};

bool is_excluded_frequency(double t);

struct FourierSample {
  double t = 0.0;
  Eigen::Index n = 0;
  std::complex<double> S;
  Eigen::Vector2d V = Eigen::Vector2d::Zero();
  Eigen::Vector2d W = Eigen::Vector2d::Zero();
  double I = 0.0;
};

/// Evaluates S, V, W, I at every grid point. `centering` holds E_0 S_n(t) per
/// point; without it W equals V.
std::vector<FourierSample>
fourier_batch(const Eigen::Ref<const Eigen::VectorXd> &values, const FrequencyGrid &grid,
              const std::optional<std::vector<std::complex<double>>> &centering = std::nullopt);

void write_fourier_csv(std::ostream &out, const std::vector<FourierSample> &samples);

} // namespace qclt

#endif // QCLT_FOURIER_STATS_HPP
