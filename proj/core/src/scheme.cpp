#include "granular/scheme.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

#include "granular/parallel.hpp"
#include "granular/rng.hpp"

namespace granular {
namespace {

rng::StreamId noise_stream(const Ensemble& e) {
  return {e.seed, rng::Purpose::noise, e.stream_tag};
}

void check_steps_fit(std::int64_t step, int substeps) {
  if ((step + 1) * static_cast<std::int64_t>(substeps) > (std::int64_t{1} << 32)) {
    throw std::invalid_argument("step counter exceeds the 32-bit noise stream range");
  }
}

/// Uniform on the sphere of radius eps in R^d.
void sphere_perturbation(const Ensemble& e, std::size_t i, double eps, std::span<double> out) {
  rng::CounterStream stream({e.seed, rng::Purpose::perturbation, e.stream_tag},
                            static_cast<std::uint32_t>(e.step_index), static_cast<std::uint32_t>(i));
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (double& c : out) {
      c = stream.normal();
      norm2 += c * c;
    }
  } while (norm2 == 0.0);
  const double scale = eps / std::sqrt(norm2);
  for (double& c : out) c *= scale;
}

}  // namespace

std::string_view to_string(SchemeMode m) noexcept {
  switch (m) {
    case SchemeMode::local: return "local";
    case SchemeMode::interacting: return "interacting";
    case SchemeMode::perturbed: return "perturbed";
  }
  return "unknown";
}

SchemeMode parse_scheme_mode(std::string_view s) {
  if (s == "local") return SchemeMode::local;
  if (s == "interacting") return SchemeMode::interacting;
  if (s == "perturbed") return SchemeMode::perturbed;
  throw std::invalid_argument(fmt::format("unknown mode '{}' (local, interacting, perturbed)", s));
}

void SchemeConfig::validate(double lambda_v) const {
  if (!(tau > 0.0) || !std::isfinite(tau)) throw std::invalid_argument("tau must be positive");
  if (n_steps < 0) throw std::invalid_argument("n_steps must be nonnegative");
  if (!(perturbation_eps >= 0.0)) throw std::invalid_argument("perturbation_eps must be nonnegative");
  if (noise_substeps < 1) throw std::invalid_argument("noise_substeps must be at least 1");
  if (lambda_v > 0.0 && tau >= 1.0 / lambda_v && !allow_large_tau) {
    throw std::invalid_argument(fmt::format(
        "tau = {} is not below 1/lambda_V = {}; set allow_large_tau to override", tau, 1.0 / lambda_v));
  }
  prox.validate();
}

Ensemble gaussian_step(Ensemble e, double tau, int substeps, int threads) {
  if (!(tau >= 0.0)) throw std::invalid_argument("gaussian_step: tau must be nonnegative");
  if (substeps < 1) throw std::invalid_argument("gaussian_step: substeps must be positive");
  check_steps_fit(e.step_index, substeps);
  const double scale = std::sqrt(2.0 * tau / substeps);
  const auto id = noise_stream(e);
  const auto base = static_cast<std::uint32_t>(e.step_index * substeps);
  parallel_for(e.count, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> z(e.dim);
    for (std::size_t i = begin; i < end; ++i) {
      auto x = e.particle(i);
      for (int j = 0; j < substeps; ++j) {
        rng::standard_normals(id, base + static_cast<std::uint32_t>(j), static_cast<std::uint32_t>(i), z);
        for (std::size_t c = 0; c < e.dim; ++c) x[c] += scale * z[c];
      }
    }
  });
  ++e.step_index;
  return e;
}

Ensemble ou_exact_step(Ensemble e, double tau, int threads) {
  if (!(tau > 0.0)) throw std::invalid_argument("ou_exact_step: tau must be positive");
  check_steps_fit(e.step_index, 1);
  const double decay = std::exp(-tau);
  const double scale = std::sqrt(-std::expm1(-2.0 * tau));
  const auto id = noise_stream(e);
  const auto step = static_cast<std::uint32_t>(e.step_index);
  parallel_for(e.count, threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> z(e.dim);
    for (std::size_t i = begin; i < end; ++i) {
      auto x = e.particle(i);
      rng::standard_normals(id, step, static_cast<std::uint32_t>(i), z);
      for (std::size_t c = 0; c < e.dim; ++c) x[c] = decay * x[c] + scale * z[c];
    }
  });
  ++e.step_index;
  return e;
}

Ensemble step_local(Ensemble e, const Potential& v, const SchemeConfig& cfg, ProxWarmStart* warm) {
  if (v.dim() != e.dim) {
    throw std::invalid_argument(
        fmt::format("potential {} has dimension {}, ensemble has {}", v.id(), v.dim(), e.dim));
  }
  if (warm && warm->gammas.size() != e.count) warm->gammas.assign(e.count, 0.0);
  const bool perturb = cfg.mode == SchemeMode::perturbed && cfg.perturbation_eps > 0.0;
  parallel_for(e.count, cfg.threads, [&](std::size_t begin, std::size_t end) {
    std::vector<double> xi(e.dim);
    for (std::size_t i = begin; i < end; ++i) {
      auto x = e.particle(i);
      try {
        if (v.has_exact_prox()) {
          const std::vector<double> in(x.begin(), x.end());
          v.exact_prox(in, cfg.tau, x);
        } else {
          BacktrackingOptions opts;
          if (warm) opts.gamma_state = &warm->gammas[i];
          const ProxResult r = prox_backtracking(v, x, cfg.tau, cfg.prox, opts);
          std::copy(r.point.begin(), r.point.end(), x.begin());
        }
      } catch (const NumericalError& err) {
        throw NumericalError(
            fmt::format("step {}: prox failed for particle {}: {}", e.step_index, i, err.what()));
      }
      if (perturb) {
        sphere_perturbation(e, i, cfg.perturbation_eps, xi);
        for (std::size_t c = 0; c < e.dim; ++c) x[c] += xi[c];
      }
    }
  });
  if (cfg.suppress_noise) {
    ++e.step_index;
    return e;
  }
  return gaussian_step(std::move(e), cfg.tau, cfg.noise_substeps, cfg.threads);
}

Ensemble step_interacting(Ensemble e, const JointPotential& psi, const SchemeConfig& cfg,
                          double* gamma_state) {
  if (psi.n_particles() != e.count || psi.dim_per_particle() != e.dim) {
    throw std::invalid_argument(fmt::format("joint potential is for {} particles in R^{}, ensemble has {} in R^{}",
                                            psi.n_particles(), psi.dim_per_particle(), e.count, e.dim));
  }
  if (psi.has_exact_prox()) {
    const std::vector<double> in = e.positions;
    psi.exact_prox(in, cfg.tau, e.positions);
  } else {
    JointPotential solver = psi;
    solver.set_threads(cfg.threads);
    BacktrackingOptions opts;
    opts.gamma_state = gamma_state;
    try {
      ProxResult r = prox_backtracking(solver.as_potential(), e.positions, cfg.tau, cfg.prox, opts);
      e.positions = std::move(r.point);
    } catch (const NumericalError& err) {
      throw NumericalError(fmt::format("step {}: joint prox failed: {}", e.step_index, err.what()));
    }
  }
  if (cfg.suppress_noise) {
    ++e.step_index;
    return e;
  }
  return gaussian_step(std::move(e), cfg.tau, cfg.noise_substeps, cfg.threads);
}

Snapshot take_snapshot(const Ensemble& e, double tau, const RunOptions& opts) {
  Snapshot s;
  s.step = e.step_index;
  s.time = static_cast<double>(e.step_index) * tau;
  s.mean = e.coordinate_mean();
  s.variance = e.coordinate_variance();
  for (double a : opts.moment_orders) s.moments.emplace_back(a, empirical_moment(e.view(), a));
  if (opts.keep_positions) s.positions = e.positions;
  return s;
}

RunRecord run(Ensemble initial, const ModelSpec& model, const SchemeConfig& cfg,
              const RunOptions& opts) {
  const Potential v = model.confinement();
  if (initial.dim != model.dim) {
    throw std::invalid_argument(
        fmt::format("initial ensemble is in R^{} but model {} is in R^{}", initial.dim, model.id, model.dim));
  }
  const bool joint = cfg.mode == SchemeMode::interacting;
  if (!joint && !model.local()) {
    throw std::invalid_argument(fmt::format(
        "model {} has an interaction potential; use mode = interacting", model.id));
  }
  if (opts.record_every < 1) throw std::invalid_argument("record_every must be at least 1");
  if (opts.coupled_ou_reference && !(model.local() && model.v_id == "V1")) {
    throw std::invalid_argument("the coupled OU reference applies only to V1 without interaction");
  }
  const double lambda = joint ? model.lift(1).lambda_convex() : v.lambda_convex();
  cfg.validate(lambda);
  initial.check_finite();

  const auto started = std::chrono::steady_clock::now();
  RunRecord record;
  record.model = model;
  record.config = cfg;
  record.n_particles = initial.count;

  std::optional<Ensemble> reference;
  if (opts.coupled_ou_reference) reference = initial;
  auto snapshot = [&](const Ensemble& e) {
    Snapshot s = take_snapshot(e, cfg.tau, opts);
    if (reference) {
      if (e.dim == 1) {
        s.w2_reference = w2_sorted_1d(e.positions, reference->positions).distance;
      } else if (e.count <= kAssignmentCap) {
        s.w2_reference = w2_assignment(e.view(), reference->view()).distance;
      }
    }
    record.snapshots.push_back(std::move(s));
  };

  Ensemble state = std::move(initial);
  snapshot(state);
  const std::int64_t first_step = state.step_index;

  std::optional<JointPotential> psi;
  if (joint) psi = model.lift(state.count);
  ProxWarmStart warm;
  double joint_gamma = 0.0;
  for (std::int64_t k = 0; k < cfg.n_steps; ++k) {
    if (joint) {
      state = step_interacting(std::move(state), *psi, cfg, &joint_gamma);
    } else {
      state = step_local(std::move(state), v, cfg, &warm);
    }
    if (reference) *reference = ou_exact_step(std::move(*reference), cfg.tau, cfg.threads);
    state.check_finite();
    const std::int64_t done = state.step_index - first_step;
    if (done % opts.record_every == 0 || k + 1 == cfg.n_steps) snapshot(state);
  }
  record.final_state = std::move(state);
  if (opts.record_timing) {
    record.wall_ms =
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started).count();
  }
  return record;
}

}  // namespace granular
