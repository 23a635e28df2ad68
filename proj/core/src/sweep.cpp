#include <algorithm>
#include <chrono>
#include <cmath>
#include <mutex>
#include <numeric>
#include <stdexcept>

#include <fmt/core.h>

#include "granular/experiments.hpp"
#include "granular/parallel.hpp"

namespace granular {
namespace {

using Clock = std::chrono::steady_clock;

double elapsed_ms(Clock::time_point since) {
  return std::chrono::duration<double, std::milli>(Clock::now() - since).count();
}

/// Steps needed to reach t with step tau; rounds to the nearest integer
/// (at least one) and reports whether rounding changed the time.
std::int64_t steps_to_reach(double t, double tau, bool& rounded) {
  const double exact = t / tau;
  const auto n = std::max<std::int64_t>(1, std::llround(exact));
  rounded = std::abs(exact - static_cast<double>(n)) > 1e-9 * std::max(1.0, exact);
  return n;
}

/// W2 between two ensembles whose particles are paired by index (common
/// initial sample and noise). Exact when an exact solver applies; for large
/// planar ensembles, the root mean of exact W2^2 over index blocks.
double coupled_w2_squared(const Ensemble& a, const Ensemble& b) {
  if (a.dim == 1) return w2_sorted_1d(a.positions, b.positions).squared;
  if (a.count <= kAssignmentCap) return w2_assignment(a.view(), b.view()).squared;
  double acc = 0.0;
  std::size_t blocks = 0;
  for (std::size_t begin = 0; begin < a.count; begin += kAssignmentCap) {
    const std::size_t n = std::min(kAssignmentCap, a.count - begin);
    const std::span<const double> sa(a.positions.data() + begin * a.dim, n * a.dim);
    const std::span<const double> sb(b.positions.data() + begin * b.dim, n * b.dim);
    acc += w2_assignment({sa, a.dim}, {sb, b.dim}).squared;
    ++blocks;
  }
  return acc / static_cast<double>(blocks);
}

ProxConfig prox_for(const std::optional<ProxConfig>& given, double tau, double lambda) {
  if (given) return *given;
  return ProxConfig::defaults(tau, lambda);
}

void summarize(SweepRecord& record, bool squared) {
  std::sort(record.points.begin(), record.points.end(), [](const SweepPoint& x, const SweepPoint& y) {
    return x.value != y.value ? x.value < y.value : x.replication < y.replication;
  });
  std::vector<double> xs, ys;
  for (auto& row : record.summary) {
    std::vector<double> metric;
    for (const auto& p : record.points) {
      if (p.value == row.value) metric.push_back(squared ? p.w2_squared : p.w2);
    }
    const double mean = std::accumulate(metric.begin(), metric.end(), 0.0) / static_cast<double>(metric.size());
    row.mean_metric = mean;
    if (metric.size() >= 2) {
      double ss = 0.0;
      for (double m : metric) ss += (m - mean) * (m - mean);
      row.std_error = std::sqrt(ss / static_cast<double>(metric.size() - 1) / static_cast<double>(metric.size()));
    }
    xs.push_back(row.value);
    ys.push_back(mean);
  }
  std::sort(record.summary.begin(), record.summary.end(),
            [](const SweepSummaryRow& x, const SweepSummaryRow& y) { return x.value < y.value; });
  std::vector<double> sx, sy;
  for (const auto& row : record.summary) {
    sx.push_back(row.value);
    sy.push_back(row.mean_metric);
  }
  bool all_positive = std::all_of(sy.begin(), sy.end(), [](double v) { return v > 0.0; });
  if (all_positive) {
    record.fit = fit_loglog(sx, sy);
  } else {
    record.notes.push_back("a sweep point has zero mean distance; slope not fitted");
  }
}

}  // namespace

SweepRecord tau_sweep(const ModelSpec& model, const TauSweepConfig& cfg) {
  if (cfg.taus.empty()) throw std::invalid_argument("tau_sweep: no step sizes given");
  for (double tau : cfg.taus) {
    if (!(tau > 0.0)) throw std::invalid_argument("tau_sweep: step sizes must be positive");
  }
  if (cfg.taus.size() >= 2 &&
      std::all_of(cfg.taus.begin(), cfg.taus.end(), [&](double t) { return t == cfg.taus.front(); })) {
    throw std::invalid_argument("tau_sweep: all step sizes are equal; the log-log regression is undefined");
  }
  for (std::size_t i = 1; i < cfg.taus.size(); ++i) {
    if (!(cfg.taus[i] < cfg.taus[i - 1])) {
      throw std::invalid_argument("tau_sweep: step sizes must be strictly descending");
    }
  }
  if (cfg.replications < 1) throw std::invalid_argument("tau_sweep: need at least one replication");
  if (cfg.n_particles == 0) throw std::invalid_argument("tau_sweep: need at least one particle");
  if (!(cfg.t_eval > 0.0)) throw std::invalid_argument("tau_sweep: t_eval must be positive");
  if (cfg.reference_refinement < 1) throw std::invalid_argument("tau_sweep: refinement must be positive");

  const bool exact_reference = model.local() && model.v_id == "V1";
  const bool joint = !model.local();
  const GaussianMixture initial = cfg.initial ? *cfg.initial : model.default_initial();
  const double lambda = joint ? model.lift(1).lambda_convex() : model.confinement().lambda_convex();
  const double tau_ref = cfg.taus.back() / cfg.reference_refinement;

  SweepRecord record;
  record.variable = SweepVariable::tau;
  record.model = model.id;
  record.fitted_quantity = "w2_squared";
  record.t_eval = cfg.t_eval;
  if (exact_reference) {
    record.reference =
        "exact Ornstein-Uhlenbeck evolution of the same initial sample, driven by the chain's noise";
  } else {
    record.reference = fmt::format(
        "same scheme with N = {} at tau_ref = {:.17g} (min tau / {}), sharing the Brownian path",
        cfg.n_particles, tau_ref, cfg.reference_refinement);
  }

  struct Plan {
    double tau;
    std::int64_t steps;
    int substeps;
  };
  std::vector<Plan> plans;
  for (double tau : cfg.taus) {
    bool rounded = false;
    const std::int64_t steps = steps_to_reach(cfg.t_eval, tau, rounded);
    if (rounded) {
      record.notes.push_back(fmt::format("tau = {:.17g}: t_eval not a multiple of tau; {} steps reach t = {:.17g}",
                                         tau, steps, static_cast<double>(steps) * tau));
    }
    int substeps = 1;
    if (!exact_reference) {
      const double ratio = tau / tau_ref;
      substeps = static_cast<int>(std::llround(ratio));
      if (std::abs(ratio - substeps) > 1e-9 * ratio) {
        throw std::invalid_argument(fmt::format(
            "tau_sweep: tau = {} is not an integer multiple of the reference step {}", tau, tau_ref));
      }
    }
    plans.push_back({tau, steps, substeps});
    record.summary.push_back({tau, 0.0, std::nullopt, steps});
  }

  std::mutex record_mutex;
  auto replicate = [&](int rep) {
    const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(rep);
    const Ensemble start = sample_mixture(initial, cfg.n_particles, seed);
    const Potential v = model.confinement();
    std::optional<JointPotential> psi;
    if (joint) psi = model.lift(cfg.n_particles);

    auto advance = [&](Ensemble e, double tau, std::int64_t steps, int substeps) {
      SchemeConfig sc;
      sc.tau = tau;
      sc.n_steps = steps;
      sc.mode = joint ? SchemeMode::interacting : SchemeMode::local;
      sc.prox = prox_for(cfg.prox, tau, lambda);
      sc.seed = seed;
      sc.noise_substeps = substeps;
      sc.validate(lambda);
      ProxWarmStart warm;
      double gamma = 0.0;
      for (std::int64_t k = 0; k < steps; ++k) {
        e = joint ? step_interacting(std::move(e), *psi, sc, &gamma) : step_local(std::move(e), v, sc, &warm);
      }
      e.check_finite();
      return e;
    };

    // Fine self-reference, advanced incrementally to each requested time.
    std::vector<std::pair<std::int64_t, Ensemble>> fine_states;
    if (!exact_reference) {
      std::vector<std::int64_t> targets;
      for (const auto& p : plans) targets.push_back(p.steps * p.substeps);
      std::sort(targets.begin(), targets.end());
      targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
      Ensemble fine = start;
      std::int64_t done = 0;
      for (std::int64_t target : targets) {
        fine = advance(std::move(fine), tau_ref, target - done, 1);
        done = target;
        fine_states.emplace_back(target, fine);
      }
    }

    for (const auto& plan : plans) {
      const auto begun = Clock::now();
      const Ensemble chain = advance(start, plan.tau, plan.steps, plan.substeps);
      double w2sq = 0.0;
      if (exact_reference) {
        Ensemble exact = start;
        for (std::int64_t k = 0; k < plan.steps; ++k) exact = ou_exact_step(std::move(exact), plan.tau);
        w2sq = coupled_w2_squared(chain, exact);
      } else {
        const std::int64_t target = plan.steps * plan.substeps;
        const auto it = std::find_if(fine_states.begin(), fine_states.end(),
                                     [&](const auto& s) { return s.first == target; });
        w2sq = coupled_w2_squared(chain, it->second);
      }
      SweepPoint point;
      point.value = plan.tau;
      point.replication = rep;
      point.w2_squared = w2sq;
      point.w2 = std::sqrt(w2sq);
      point.seed = seed;
      point.time = static_cast<double>(plan.steps) * plan.tau;
      if (cfg.record_timing) point.wall_ms = elapsed_ms(begun);
      std::lock_guard lock(record_mutex);
      record.points.push_back(point);
    }
  };

  parallel_for(static_cast<std::size_t>(cfg.replications), cfg.threads,
               [&](std::size_t begin, std::size_t end) {
                 for (std::size_t r = begin; r < end; ++r) replicate(static_cast<int>(r));
               });
  summarize(record, true);
  return record;
}

SweepRecord n_sweep(const ModelSpec& model, const NSweepConfig& cfg) {
  if (cfg.ns.empty()) throw std::invalid_argument("n_sweep: no particle counts given");
  for (std::size_t i = 0; i < cfg.ns.size(); ++i) {
    if (cfg.ns[i] == 0) throw std::invalid_argument("n_sweep: particle counts must be positive");
    if (i > 0 && !(cfg.ns[i] > cfg.ns[i - 1])) {
      throw std::invalid_argument("n_sweep: particle counts must be strictly ascending");
    }
  }
  if (!(cfg.reference_n > cfg.ns.back())) {
    throw std::invalid_argument(fmt::format("n_sweep: reference_n = {} must exceed every tested N (max {})",
                                            cfg.reference_n, cfg.ns.back()));
  }
  if (cfg.replications < 1 || cfg.reference_replications < 1) {
    throw std::invalid_argument("n_sweep: need at least one replication");
  }
  if (!(cfg.tau > 0.0) || !(cfg.t_eval > 0.0) || !(cfg.reference_tau_ratio > 0.0)) {
    throw std::invalid_argument("n_sweep: tau, t_eval and the reference ratio must be positive");
  }

  const GaussianMixture initial = cfg.initial ? *cfg.initial : model.default_initial();
  const double lambda = model.lift(1).lambda_convex();
  const double tau_ref = cfg.tau * cfg.reference_tau_ratio;

  SweepRecord record;
  record.variable = SweepVariable::n_particles;
  record.model = model.id;
  record.fitted_quantity = "w2";
  record.t_eval = cfg.t_eval;

  bool rounded = false;
  const std::int64_t steps = steps_to_reach(cfg.t_eval, cfg.tau, rounded);
  if (rounded) {
    record.notes.push_back(fmt::format("tested runs: {} steps reach t = {:.17g}", steps,
                                       static_cast<double>(steps) * cfg.tau));
  }
  bool ref_rounded = false;
  const std::int64_t ref_steps = steps_to_reach(cfg.t_eval, tau_ref, ref_rounded);
  if (ref_rounded) {
    record.notes.push_back(fmt::format("reference runs: {} steps of {:.17g} reach t = {:.17g}", ref_steps,
                                       tau_ref, static_cast<double>(ref_steps) * tau_ref));
  }
  record.reference = fmt::format(
      "pooled {} interacting run(s) with N = {} at tau_ref = {:.17g} ({} x tau)", cfg.reference_replications,
      cfg.reference_n, tau_ref, cfg.reference_tau_ratio);

  auto simulate = [&](std::size_t n, double tau, std::int64_t n_steps, std::uint64_t seed, std::uint32_t tag) {
    Ensemble e = sample_mixture(initial, n, seed, tag);
    SchemeConfig sc;
    sc.tau = tau;
    sc.n_steps = n_steps;
    sc.mode = SchemeMode::interacting;
    sc.prox = prox_for(cfg.prox, tau, lambda);
    sc.seed = seed;
    sc.validate(lambda);
    const JointPotential psi = model.lift(n);
    double gamma = 0.0;
    for (std::int64_t k = 0; k < n_steps; ++k) e = step_interacting(std::move(e), psi, sc, &gamma);
    e.check_finite();
    return e;
  };

  // Reference runs use their own stream tags so they never share draws with tested runs.
  std::vector<Ensemble> references(static_cast<std::size_t>(cfg.reference_replications));
  parallel_for(references.size(), cfg.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t r = begin; r < end; ++r) {
      references[r] = simulate(cfg.reference_n, tau_ref, ref_steps, cfg.seed, 0x100u + static_cast<std::uint32_t>(r));
    }
  });
  std::vector<double> pooled;
  for (const auto& e : references) pooled.insert(pooled.end(), e.positions.begin(), e.positions.end());
  const std::size_t dim = initial.dim();
  const PointSetView reference_view{pooled, dim};

  for (std::size_t n : cfg.ns) record.summary.push_back({static_cast<double>(n), 0.0, std::nullopt, steps});

  struct Job {
    std::size_t n;
    int rep;
  };
  std::vector<Job> jobs;
  for (std::size_t n : cfg.ns) {
    for (int r = 0; r < cfg.replications; ++r) jobs.push_back({n, r});
  }
  std::vector<SweepPoint> points(jobs.size());
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t begin, std::size_t end) {
    for (std::size_t j = begin; j < end; ++j) {
      const auto begun = Clock::now();
      const std::uint64_t seed = cfg.seed + static_cast<std::uint64_t>(jobs[j].rep);
      const Ensemble e = simulate(jobs[j].n, cfg.tau, steps, seed, 0u);
      W2Report report;
      if (dim == 1) {
        report = w2_quantile_1d(e.positions, pooled);
      } else {
        report = w2_subsampled(e.view(), reference_view, std::min(jobs[j].n, kAssignmentCap), 5, seed);
      }
      SweepPoint& p = points[j];
      p.value = static_cast<double>(jobs[j].n);
      p.replication = jobs[j].rep;
      p.w2 = report.distance;
      p.w2_squared = report.distance * report.distance;
      p.seed = seed;
      p.time = static_cast<double>(steps) * cfg.tau;
      if (cfg.record_timing) p.wall_ms = elapsed_ms(begun);
    }
  });
  record.points = std::move(points);
  if (dim != 1) {
    record.notes.push_back("d > 1: W2 estimated by exact assignment against 5 random reference subsamples");
  }
  summarize(record, false);
  return record;
}

}  // namespace granular
