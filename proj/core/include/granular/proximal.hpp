#pragma once

#include <optional>
#include <span>
#include <vector>

#include "granular/errors.hpp"
#include "granular/potentials.hpp"

namespace granular {

/// Settings for the backtracking gradient-descent prox solver.
struct ProxConfig {
  double gamma0 = 1e-3;         // initial trial step
  double shrink = 0.5;          // step multiplier after a rejected trial, in (0, 1)
  double grad_tol = 1e-6;       // stop when |grad P_x| <= grad_tol
  int max_iters = 500;          // accepted steps
  double epsilon_target = 1e-6; // intended bound on |output - prox|

  /// gamma0 = tau, shrink = 0.5, epsilon = tau^2, grad_tol = epsilon (lambda + 1/tau).
  static ProxConfig defaults(double tau, double lambda);
  /// grad_tol chosen so that strong convexity of P_x certifies |y - prox| <= epsilon.
  static ProxConfig from_epsilon(double tau, double lambda, double epsilon);

  /// Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct ProxResult {
  Point point;
  int iterations = 0;        // accepted descent steps
  double final_gamma = 0.0;  // step size in force at exit
  double residual = 0.0;     // |grad P_x(point)|
  /// Accepted iterates eta_0, eta_1, ... (filled only on request).
  std::vector<Point> trace;
};

class ProxFailure : public NumericalError {
 public:
  enum class Kind { max_iters_exceeded, step_underflow };
  ProxFailure(Kind kind, const std::string& what) : NumericalError(what), kind_(kind) {}
  Kind kind() const noexcept { return kind_; }

 private:
  Kind kind_;
};

/// center + (x - center) / (1 + tau lam): the minimizer of
/// (lam/2)|y - center|^2 + |y - x|^2 / (2 tau).
Point prox_exact_quadratic(std::span<const double> x, double tau, double lam,
                           std::span<const double> center);

struct BacktrackingOptions {
  bool record_trace = false;
  /// Warm start: read as the initial step when set, updated with the final step.
  double* gamma_state = nullptr;
};

/// Gradient descent on P_x(y) = V(y) + |y - x|^2 / (2 tau) starting from y = x.
/// A trial step y - gamma grad P_x(y) is accepted only when
///   P_x(trial) <= V(x)  and  P_x(trial) <= P_x(y) + grad P_x(y).(trial - y) + |trial - y|^2/(2 gamma);
/// otherwise gamma shrinks. Terminates when |grad P_x| <= grad_tol.
ProxResult prox_backtracking(const Potential& p, std::span<const double> x, double tau,
                             const ProxConfig& cfg, const BacktrackingOptions& opts = {});

/// Exact prox when the potential provides one (iterations = 0), else backtracking.
ProxResult prox(const Potential& p, std::span<const double> x, double tau, const ProxConfig& cfg,
                const BacktrackingOptions& opts = {});

}  // namespace granular
