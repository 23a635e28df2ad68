#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "granular/mixture.hpp"
#include "granular/models.hpp"
#include "granular/scheme.hpp"

namespace granular {

// ---------------------------------------------------------------------------
// Analytic references
// ---------------------------------------------------------------------------

/// Law at time t of dY = -Y dt + sqrt(2) dB started from m0: every component
/// (w, m, S) maps to (w, e^{-t} m, e^{-2t} S + (1 - e^{-2t}) I).
GaussianMixture ou_exact_marginal(const GaussianMixture& m0, double t);

struct MeanVariance {
  std::vector<double> mean;
  std::vector<double> variance;  // per coordinate
};

/// Mean-field mean and per-coordinate variance for the quadratic models:
///   B: drift -(3Y/4 + m_t/4)   mean' = -mean, var' = -(3/2) var + 2
///   F: drift -(2Y - m_t)       mean' = -mean, var' = -4 var + 2
/// Throws std::invalid_argument for other models.
MeanVariance quadratic_meanfield_reference(char model, std::span<const double> mean0,
                                           std::span<const double> var0, double t);
MeanVariance quadratic_meanfield_reference(char model, const GaussianMixture& m0, double t);

/// Exact mean-field law at time t for models B and F. The dynamics are linear
/// given the deterministic mean path, so each mixture component stays Gaussian.
GaussianMixture quadratic_meanfield_marginal(char model, const GaussianMixture& m0, double t);

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Least squares of log y on log x. nullopt for a single point; throws
/// std::invalid_argument when all x coincide or any value is not positive.
std::optional<LogLogFit> fit_loglog(std::span<const double> x, std::span<const double> y);

enum class SweepVariable { tau, n_particles };

struct SweepPoint {
  double value = 0.0;  // tau or N
  int replication = 0;
  double w2 = 0.0;
  double w2_squared = 0.0;
  std::uint64_t seed = 0;
  double wall_ms = 0.0;
  double time = 0.0;  // time actually reached (after step rounding)
};

struct SweepSummaryRow {
  double value = 0.0;
  double mean_metric = 0.0;              // mean of the fitted quantity
  std::optional<double> std_error;       // absent with one replication
  std::int64_t steps = 0;
};

struct SweepRecord {
  SweepVariable variable = SweepVariable::tau;
  char model = 'A';
  std::vector<SweepPoint> points;  // sorted by value, then replication
  std::vector<SweepSummaryRow> summary;
  std::string fitted_quantity;     // "w2_squared" or "w2"
  std::optional<LogLogFit> fit;
  std::string reference;           // human-readable description of the reference
  double t_eval = 0.0;
  std::vector<std::string> notes;  // step rounding and similar adjustments
};

struct TauSweepConfig {
  std::vector<double> taus;  // strictly descending
  std::size_t n_particles = 20000;
  double t_eval = 0.125;
  int replications = 5;
  std::uint64_t seed = 0;
  int threads = 1;
  std::optional<GaussianMixture> initial;  // model default when absent
  /// Refinement factor of the self-reference (tau_ref = min(taus) / factor).
  int reference_refinement = 5;
  bool record_timing = false;
  std::optional<ProxConfig> prox;  // defaults(tau, lambda) when absent
};

/// W2^2 at t_eval against a reference, per tau and replication, plus the
/// fitted slope of log mean W2^2 against log tau.
///
/// For V1 without interaction the reference is the exact OU evolution of the
/// same initial sample, driven by the chain's own noise. Otherwise it is the
/// same scheme at tau_ref, sharing the Brownian path.
SweepRecord tau_sweep(const ModelSpec& model, const TauSweepConfig& cfg);

struct NSweepConfig {
  std::vector<std::size_t> ns;  // strictly ascending
  double tau = 1e-3;
  double t_eval = 0.25;
  int replications = 5;
  std::size_t reference_n = 2048;
  int reference_replications = 2;
  /// tau_ref = ratio * tau.
  double reference_tau_ratio = 0.225;
  std::uint64_t seed = 0;
  int threads = 1;
  std::optional<GaussianMixture> initial;
  bool record_timing = false;
  std::optional<ProxConfig> prox;
};

/// W2 between the empirical law of an N-particle interacting run and a pooled
/// large-N, fine-tau reference, per N and replication, plus the fitted slope
/// of log mean W2 against log N.
SweepRecord n_sweep(const ModelSpec& model, const NSweepConfig& cfg);

struct MomentSeries {
  std::vector<std::int64_t> steps;
  std::vector<double> values;
  double supremum = 0.0;
};

/// (k, E|X_k|^a) from a run record. a = 0 gives the constant 1. Throws
/// std::invalid_argument when the record has no moment of order a.
MomentSeries moment_trace(const RunRecord& record, double a);

}  // namespace granular
