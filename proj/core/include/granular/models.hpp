#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "granular/joint_potential.hpp"
#include "granular/mixture.hpp"
#include "granular/potentials.hpp"

namespace granular {

/// One entry of the model catalog A-H.
struct ModelSpec {
  char id = 'A';
  std::string v_id;
  std::optional<std::string> w_id;  // absent for local models (W == 0)
  std::size_t dim = 1;
  std::string kind;                 // "local", "repulsive", "attractive", ...
  std::string initial_preset;       // "paper-1d" or "paper-2d"

  bool local() const noexcept { return !w_id.has_value(); }
  /// "V1 + W1, repulsive" / "V1, local".
  std::string describe() const;

  Potential confinement() const;
  /// W, or the zero potential for local models.
  Potential interaction() const;
  GaussianMixture default_initial() const;
  JointPotential lift(std::size_t n_particles) const;

  /// Same model on R^dim. Throws for models whose potentials require d = 2.
  ModelSpec with_dim(std::size_t dim) const;
};

const std::vector<ModelSpec>& model_catalog();

/// Accepts "A".."H" (case-insensitive). Throws std::invalid_argument.
ModelSpec find_model(std::string_view id);

GaussianMixture initial_preset(std::string_view name);

}  // namespace granular
