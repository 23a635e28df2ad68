#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string_view>
#include <vector>

#include "granular/ensemble.hpp"
#include "granular/joint_potential.hpp"
#include "granular/models.hpp"
#include "granular/proximal.hpp"

namespace granular {

enum class SchemeMode {
  local,        // particle-wise prox of V, then Gaussian noise
  interacting,  // joint prox of Psi over R^{dN}, then Gaussian noise
  perturbed,    // local, plus a bounded perturbation after each prox
};

std::string_view to_string(SchemeMode m) noexcept;
SchemeMode parse_scheme_mode(std::string_view s);

struct SchemeConfig {
  double tau = 1e-3;
  std::int64_t n_steps = 1;
  SchemeMode mode = SchemeMode::local;
  double perturbation_eps = 0.0;
  ProxConfig prox;
  std::uint64_t seed = 0;
  /// Permit tau >= 1/lambda_V, outside the range the convergence theory covers.
  bool allow_large_tau = false;
  /// Worker threads for per-particle work. Results do not depend on this.
  int threads = 1;
  /// Each Gaussian step is the sum of this many finer increments, so a chain
  /// at step tau shares its Brownian path with a chain at tau / substeps.
  int noise_substeps = 1;
  /// Test hook: skip the Gaussian half-step.
  bool suppress_noise = false;

  /// Throws std::invalid_argument on inconsistent settings.
  void validate(double lambda_v) const;
};

/// Adds independent N(0, 2 tau I) increments and advances step_index.
/// Particle i at step k draws from (seed, noise, stream_tag) at counter
/// (k * substeps + j, i) for j < substeps.
Ensemble gaussian_step(Ensemble e, double tau, int substeps = 1, int threads = 1);

/// Per-particle warm-start step sizes for the backtracking solver.
struct ProxWarmStart {
  std::vector<double> gammas;
};

/// One local step: X <- prox_V^tau(X) (+ xi in perturbed mode), then noise.
Ensemble step_local(Ensemble e, const Potential& v, const SchemeConfig& cfg,
                    ProxWarmStart* warm = nullptr);

/// One interacting step: X <- prox_Psi^tau(X) jointly, then noise.
Ensemble step_interacting(Ensemble e, const JointPotential& psi, const SchemeConfig& cfg,
                          double* gamma_state = nullptr);

/// Exact Ornstein-Uhlenbeck transition for V = |x|^2/2 over time tau, driven by
/// the same standard normals gaussian_step would use at this step:
/// X <- e^{-tau} X + sqrt(1 - e^{-2 tau}) xi. Advances step_index.
Ensemble ou_exact_step(Ensemble e, double tau, int threads = 1);

struct Snapshot {
  std::int64_t step = 0;
  double time = 0.0;
  std::vector<double> mean;
  std::vector<double> variance;
  /// (order a, E|X|^a) pairs.
  std::vector<std::pair<double, double>> moments;
  std::optional<double> w2_reference;
  std::optional<std::vector<double>> positions;
};

struct RunOptions {
  std::int64_t record_every = 10;
  bool keep_positions = false;
  std::vector<double> moment_orders{1.0, 2.0, 4.0};
  /// Track an exact OU path under common noise and record W2 against it.
  /// Valid only for V = V1 without interaction.
  bool coupled_ou_reference = false;
  bool record_timing = false;
};

struct RunRecord {
  ModelSpec model;
  SchemeConfig config;
  std::size_t n_particles = 0;
  std::vector<Snapshot> snapshots;
  Ensemble final_state;
  double wall_ms = 0.0;
};

/// Runs cfg.n_steps steps of the scheme selected by cfg.mode.
RunRecord run(Ensemble initial, const ModelSpec& model, const SchemeConfig& cfg,
              const RunOptions& opts = {});

/// Snapshot of the current state (used by run and by sweep harnesses).
Snapshot take_snapshot(const Ensemble& e, double tau, const RunOptions& opts);

}  // namespace granular
