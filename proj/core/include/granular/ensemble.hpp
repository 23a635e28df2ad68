#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "granular/mixture.hpp"
#include "granular/transport.hpp"

namespace granular {

/// N particles in R^d, stored row-major, plus the provenance needed to
/// regenerate every random draw that produced them.
struct Ensemble {
  std::vector<double> positions;
  std::size_t count = 0;
  std::size_t dim = 1;
  std::int64_t step_index = 0;
  std::uint64_t seed = 0;
  std::uint32_t stream_tag = 0;

  Ensemble() = default;
  Ensemble(std::size_t n, std::size_t d, std::uint64_t seed_, std::uint32_t tag = 0);

  std::span<double> particle(std::size_t i) { return {positions.data() + i * dim, dim}; }
  std::span<const double> particle(std::size_t i) const { return {positions.data() + i * dim, dim}; }
  PointSetView view() const { return {positions, dim}; }

  /// Per-coordinate sample mean and (1/N-normalized) variance.
  std::vector<double> coordinate_mean() const;
  std::vector<double> coordinate_variance() const;

  /// Throws NumericalError if any coordinate is non-finite.
  void check_finite() const;
};

/// Draws n i.i.d. points: component by weight, then a Gaussian draw.
/// Particle i uses the stream (seed, initial, tag) at index i.
Ensemble sample_mixture(const GaussianMixture& m, std::size_t n, std::uint64_t seed,
                        std::uint32_t tag = 0);

}  // namespace granular
