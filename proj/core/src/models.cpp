#include "granular/models.hpp"

#include <cctype>
#include <stdexcept>

#include <fmt/core.h>

namespace granular {

std::string ModelSpec::describe() const {
  if (w_id) return fmt::format("{} + {}, {}", v_id, *w_id, kind);
  return fmt::format("{}, {}", v_id, kind);
}

Potential ModelSpec::confinement() const { return make_builtin(v_id, dim); }

Potential ModelSpec::interaction() const {
  return w_id ? make_builtin(*w_id, dim) : zero_potential(dim);
}

GaussianMixture ModelSpec::default_initial() const {
  if (dim == 1 || dim == 2) {
    const GaussianMixture preset = granular::initial_preset(initial_preset);
    if (preset.dim() == dim) return preset;
  }
  return GaussianMixture::standard_normal(dim);
}

JointPotential ModelSpec::lift(std::size_t n_particles) const {
  return lift_psi(confinement(), interaction(), n_particles);
}

ModelSpec ModelSpec::with_dim(std::size_t d) const {
  if (d == 0) throw std::invalid_argument("model dimension must be positive");
  if ((v_id == "V3") && d != 2) {
    throw std::invalid_argument(fmt::format("model {} is defined only in dimension 2", id));
  }
  ModelSpec copy = *this;
  copy.dim = d;
  return copy;
}

const std::vector<ModelSpec>& model_catalog() {
  static const std::vector<ModelSpec> catalog{
      {'A', "V1", std::nullopt, 1, "local", "paper-1d"},
      {'B', "V1", "W1", 1, "repulsive", "paper-1d"},
      {'C', "V1", "W2", 1, "attractive-repulsive", "paper-1d"},
      {'D', "V1", "W3", 1, "attractive", "paper-1d"},
      {'E', "V2", std::nullopt, 1, "local", "paper-1d"},
      {'F', "V1", "W4", 1, "attractive", "paper-1d"},
      {'G', "V3", "W5", 2, "repulsive", "paper-2d"},
      {'H', "V3", "W6", 2, "attractive", "paper-2d"},
  };
  return catalog;
}

ModelSpec find_model(std::string_view id) {
  if (id.size() == 1) {
    const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(id[0])));
    for (const auto& m : model_catalog()) {
      if (m.id == c) return m;
    }
  }
  throw std::invalid_argument(fmt::format("unknown model '{}' (expected A-H)", id));
}

GaussianMixture initial_preset(std::string_view name) {
  if (name == "paper-1d") return GaussianMixture::paper_1d();
  if (name == "paper-2d") return GaussianMixture::paper_2d();
  throw std::invalid_argument(fmt::format("unknown initial preset '{}'", name));
}

}  // namespace granular
