#include "qclt/fourier_stats.hpp"

#include <cstdio>

#include "qclt/rng.hpp"

namespace qclt {

bool is_excluded_frequency(double t) {
  constexpr double pi = std::numbers::pi;
  for (double e : {0.0, pi / 2.0, pi, 3.0 * pi / 2.0, two_pi}) {
    if (std::abs(t - e) <= 1e-12) {
      return true;
    }
  }
  return false;
}

bool FrequencyGrid::any_excluded() const {
  for (bool e : excluded) {
    if (e) {
      return true;
    }
  }
  return false;
}

FrequencyGrid FrequencyGrid::explicit_points(std::vector<double> points) {
  FrequencyGrid grid;
  grid.kind = GridKind::explicit_list;
  for (double t : points) {
    if (!(t > 0.0 && t < two_pi)) {
      throw std::invalid_argument("frequency " + std::to_string(t) + " outside (0, 2pi)");
    }
  }
  grid.points = std::move(points);
  for (double t : grid.points) {
    grid.excluded.push_back(is_excluded_frequency(t));
  }
  return grid;
}

FrequencyGrid FrequencyGrid::fourier(Eigen::Index n) {
  FrequencyGrid grid;
  grid.kind = GridKind::fourier;
  for (Eigen::Index j = 1; j < n; ++j) {
    const double t = two_pi * static_cast<double>(j) / static_cast<double>(n);
    grid.points.push_back(t);
    grid.excluded.push_back(is_excluded_frequency(t));
  }
  return grid;
}

FrequencyGrid FrequencyGrid::uniform_random(std::size_t count, std::uint64_t seed) {
  FrequencyGrid grid;
  grid.kind = GridKind::uniform_random;
  Engine engine = make_engine(seed, "frequency_grid");
  while (grid.points.size() < count) {
    const double t = two_pi * uniform01(engine);
    if (t > 0.0) {
      grid.points.push_back(t);
      grid.excluded.push_back(is_excluded_frequency(t));
    }
  }
  return grid;
}

std::vector<FourierSample>
fourier_batch(const Eigen::Ref<const Eigen::VectorXd> &values, const FrequencyGrid &grid,
              const std::optional<std::vector<std::complex<double>>> &centering) {
  if (centering && centering->size() != grid.size()) {
    throw std::invalid_argument("centering has " + std::to_string(centering->size()) +
                                " values for a grid of " + std::to_string(grid.size()));
  }
  const Eigen::Index n = values.size();
  const double root_n = std::sqrt(static_cast<double>(n));
  std::vector<FourierSample> out(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    FourierSample &s = out[i];
    s.t = grid.points[i];
    s.n = n;
    s.S = dft(values, s.t);
    s.V = Eigen::Vector2d(s.S.real(), s.S.imag()) / root_n;
    const std::complex<double> centered = centering ? s.S - (*centering)[i] : s.S;
    s.W = Eigen::Vector2d(centered.real(), centered.imag()) / root_n;
    s.I = std::norm(s.S) / (two_pi * static_cast<double>(n));
  }
  return out;
}

void write_fourier_csv(std::ostream &out, const std::vector<FourierSample> &samples) {
  out << "t,n,re_S,im_S,re_V,im_V,re_W,im_W,I\n";
  char line[512];
  for (const auto &s : samples) {
    std::snprintf(line, sizeof line, "%.17g,%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n", s.t,
                  static_cast<long long>(s.n), s.S.real(), s.S.imag(), s.V(0), s.V(1), s.W(0),
                  s.W(1), s.I);
    out << line;
  }
}

} // namespace qclt
