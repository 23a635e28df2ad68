#include "granular/ensemble.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

#include "granular/errors.hpp"
#include "granular/rng.hpp"

namespace granular {

Ensemble::Ensemble(std::size_t n, std::size_t d, std::uint64_t seed_, std::uint32_t tag)
    : positions(n * d, 0.0), count(n), dim(d), seed(seed_), stream_tag(tag) {
  if (n == 0) throw std::invalid_argument("ensemble needs at least one particle");
  if (d == 0) throw std::invalid_argument("ensemble dimension must be positive");
}

std::vector<double> Ensemble::coordinate_mean() const {
  std::vector<long double> acc(dim, 0.0L);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t c = 0; c < dim; ++c) acc[c] += positions[i * dim + c];
  }
  std::vector<double> mean(dim);
  for (std::size_t c = 0; c < dim; ++c) mean[c] = static_cast<double>(acc[c] / count);
  return mean;
}

std::vector<double> Ensemble::coordinate_variance() const {
  const auto mean = coordinate_mean();
  std::vector<long double> acc(dim, 0.0L);
  for (std::size_t i = 0; i < count; ++i) {
    for (std::size_t c = 0; c < dim; ++c) {
      const long double d = positions[i * dim + c] - mean[c];
      acc[c] += d * d;
    }
  }
  std::vector<double> var(dim);
  for (std::size_t c = 0; c < dim; ++c) var[c] = static_cast<double>(acc[c] / count);
  return var;
}

void Ensemble::check_finite() const {
  for (std::size_t k = 0; k < positions.size(); ++k) {
    if (!std::isfinite(positions[k])) {
      throw NumericalError(fmt::format("particle {} is not finite at step {}", k / dim, step_index));
    }
  }
}

Ensemble sample_mixture(const GaussianMixture& m, std::size_t n, std::uint64_t seed,
                        std::uint32_t tag) {
  m.validate();
  const std::size_t d = m.dim();
  std::vector<Eigen::MatrixXd> factors;
  factors.reserve(m.size());
  for (const auto& s : m.covariances) factors.push_back(covariance_factor(s));
  std::size_t last_positive = 0;
  for (std::size_t k = 0; k < m.size(); ++k) {
    if (m.weights[k] > 0.0) last_positive = k;
  }

  Ensemble e(n, d, seed, tag);
  Eigen::VectorXd z(static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < n; ++i) {
    rng::CounterStream stream({seed, rng::Purpose::initial, tag}, 0, static_cast<std::uint32_t>(i));
    const double u = stream.uniform();
    std::size_t k = last_positive;
    double cumulative = 0.0;
    for (std::size_t c = 0; c < m.size(); ++c) {
      cumulative += m.weights[c];
      if (m.weights[c] > 0.0 && u < cumulative) {
        k = c;
        break;
      }
    }
    for (Eigen::Index c = 0; c < z.size(); ++c) z[c] = stream.normal();
    const Eigen::VectorXd x = m.means[k] + factors[k] * z;
    for (std::size_t c = 0; c < d; ++c) e.positions[i * d + c] = x[static_cast<Eigen::Index>(c)];
  }
  return e;
}

}  // namespace granular
