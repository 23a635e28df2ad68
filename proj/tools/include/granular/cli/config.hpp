#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include "granular/cli/toml.hpp"
#include "granular/experiments.hpp"
#include "granular/models.hpp"
#include "granular/scheme.hpp"

namespace granular::cli {

enum class ParticleDump { none, final, snapshots };

struct OutputSettings {
  std::filesystem::path dir = "out";
  std::string name = "run";
  ParticleDump particles = ParticleDump::none;
};

struct RunSettings {
  ModelSpec model;
  std::size_t n_particles = 1000;
  SchemeConfig scheme;
  GaussianMixture initial;
  RunOptions options;
  OutputSettings output;
};

struct TauSweepSettings {
  ModelSpec model;
  TauSweepConfig sweep;
  OutputSettings output;
};

struct NSweepSettings {
  ModelSpec model;
  NSweepConfig sweep;
  OutputSettings output;
};

/// Config sections: [model], [run], [initial], [prox], [output], [sweep].
/// Unknown sections or keys are errors. All errors are ConfigError.
RunSettings load_run_config(const Document& doc);
TauSweepSettings load_tau_sweep_config(const Document& doc);
NSweepSettings load_n_sweep_config(const Document& doc);

}  // namespace granular::cli
