#pragma once

#include <cstddef>
#include <span>

#include "granular/potentials.hpp"

namespace granular {

/// The N-particle lift of (V, W) to R^{dN}:
///
///   Psi(x) = sum_i [ V(x^i) + 1/(2N) sum_j W(x^i - x^j) ]
///
/// The j == i term is kept, so each particle contributes W(0) to the value and
/// nothing to the gradient. Block i of the gradient is
/// grad V(x^i) + (1/N) sum_j grad W(x^i - x^j), summed in index order.
class JointPotential {
 public:
  JointPotential(Potential v, Potential w, std::size_t n_particles);

  const Potential& base_v() const noexcept { return v_; }
  const Potential& base_w() const noexcept { return w_; }
  std::size_t n_particles() const noexcept { return n_; }
  std::size_t dim_per_particle() const noexcept { return v_.dim(); }
  std::size_t total_dim() const noexcept { return n_ * v_.dim(); }
  double lambda_convex() const noexcept;
  double growth_q() const noexcept;
  bool interacting() const noexcept;

  double value(std::span<const double> x) const;
  void gradient(std::span<const double> x, std::span<double> out) const;

  /// Closed form exists when V and W are both isotropic quadratics.
  bool has_exact_prox() const noexcept;
  void exact_prox(std::span<const double> x, double tau, std::span<double> out) const;

  /// Worker threads for the O(N^2) force loop. Output is identical for any count.
  void set_threads(int threads) noexcept { threads_ = threads; }

  /// View as a plain potential on R^{dN} (for the generic proximal solver).
  Potential as_potential() const;

  /// Up to this many particles the gradient stores each pair force once and
  /// reuses it with the opposite sign (W is even, so grad W is odd).
  static constexpr std::size_t kPairCacheLimit = 4096;

 private:
  void check(std::span<const double> x) const;

  Potential v_;
  Potential w_;
  std::size_t n_;
  int threads_ = 1;
};

JointPotential lift_psi(const Potential& v, const Potential& w, std::size_t n);

}  // namespace granular
