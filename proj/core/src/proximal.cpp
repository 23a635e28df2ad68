#include "granular/proximal.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

namespace granular {
namespace {

constexpr double kMinGamma = 1e-30;

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// P_x and its gradient for a fixed anchor x.
class ProxObjective {
 public:
  ProxObjective(const Potential& p, std::span<const double> x, double tau)
      : p_(p), x_(x), inv_tau_(1.0 / tau) {}

  double value(std::span<const double> y) const {
    return p_.value_unchecked(y) + 0.5 * inv_tau_ * squared_distance(y, x_);
  }

  void gradient(std::span<const double> y, std::span<double> out) const {
    p_.gradient_unchecked(y, out);
    for (std::size_t i = 0; i < y.size(); ++i) out[i] += inv_tau_ * (y[i] - x_[i]);
  }

 private:
  const Potential& p_;
  std::span<const double> x_;
  double inv_tau_;
};

}  // namespace

ProxConfig ProxConfig::from_epsilon(double tau, double lambda, double epsilon) {
  const double modulus = lambda + 1.0 / tau;
  if (!(tau > 0.0) || !(modulus > 0.0)) {
    throw std::invalid_argument(fmt::format(
        "prox objective is not strongly convex for tau = {} and lambda = {}", tau, lambda));
  }
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon_target must be positive");
  ProxConfig cfg;
  cfg.gamma0 = tau;
  cfg.shrink = 0.5;
  cfg.max_iters = 500;
  cfg.epsilon_target = epsilon;
  cfg.grad_tol = epsilon * modulus;
  return cfg;
}

ProxConfig ProxConfig::defaults(double tau, double lambda) {
  return from_epsilon(tau, lambda, tau * tau);
}

void ProxConfig::validate() const {
  if (!(gamma0 > 0.0)) throw std::invalid_argument("prox.gamma0 must be positive");
  if (!(shrink > 0.0 && shrink < 1.0)) throw std::invalid_argument("prox.shrink must lie in (0, 1)");
  if (!(grad_tol > 0.0)) throw std::invalid_argument("prox.grad_tol must be positive");
  if (max_iters < 1) throw std::invalid_argument("prox.max_iters must be at least 1");
  if (!(epsilon_target > 0.0)) throw std::invalid_argument("prox.epsilon_target must be positive");
}

Point prox_exact_quadratic(std::span<const double> x, double tau, double lam,
                           std::span<const double> center) {
  if (!(tau > 0.0) || !(lam > 0.0)) {
    throw std::invalid_argument("prox_exact_quadratic needs tau > 0 and lam > 0");
  }
  if (x.size() != center.size()) throw std::invalid_argument("prox_exact_quadratic: size mismatch");
  Point out(x.size());
  const double factor = 1.0 / (1.0 + tau * lam);
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i])) throw NumericalError("prox_exact_quadratic: non-finite input");
    out[i] = center[i] + (x[i] - center[i]) * factor;
  }
  return out;
}

ProxResult prox_backtracking(const Potential& p, std::span<const double> x, double tau,
                             const ProxConfig& cfg, const BacktrackingOptions& opts) {
  cfg.validate();
  if (!(tau > 0.0)) throw std::invalid_argument("prox step must be positive");
  if (!(p.lambda_convex() + 1.0 / tau > 0.0)) {
    throw std::invalid_argument(fmt::format("{}: prox objective is not strongly convex at tau = {}",
                                            p.id(), tau));
  }
  // Validates dimension and finiteness of x once; the loop below runs unchecked.
  const double v_at_anchor = p.value(x);
  const ProxObjective objective(p, x, tau);

  const std::size_t n = x.size();
  Point eta(x.begin(), x.end());
  Point grad(n), trial(n);
  objective.gradient(eta, grad);
  double p_eta = objective.value(eta);
  double grad_norm = std::sqrt(dot(grad, grad));
  double gamma = (opts.gamma_state && *opts.gamma_state > 0.0) ? *opts.gamma_state : cfg.gamma0;

  ProxResult result;
  if (opts.record_trace) result.trace.push_back(eta);

  // Near a convex kink that can hold the minimizer, no gradient selection
  // vanishes. Blocks (or pair differences) within a few step lengths of such a
  // kink are moved onto it and descend along the subgradient closest to
  // stationarity.
  const auto& kinks = p.kinks();
  const auto& pair_kinks = p.pair_kinks();
  struct Snap {
    std::size_t i, j;  // j == i for a block kink
    Point shift;
  };
  std::vector<Snap> snaps;
  Point snapped, snapped_grad, kink_grad, target, closest, diff, moved;
  auto norm_of = [](std::span<const double> v) { return std::sqrt(dot(v, v)); };
  auto snap_to_kinks = [&]() {
    const std::size_t bd = kinks ? kinks->block_dim : pair_kinks->support.block_dim;
    const std::size_t blocks = n / bd;
    auto block = [&](Point& v, std::size_t b) { return std::span<double>(v.data() + b * bd, bd); };
    snaps.clear();
    snapped = eta;
    for (Point* buf : {&kink_grad, &target, &closest, &diff, &moved}) buf->resize(bd);
    if (kinks) {
      for (std::size_t b = 0; b < blocks; ++b) {
        const std::span<const double> yb = block(eta, b);
        if (kinks->distance(yb) <= 4.0 * gamma * norm_of(block(grad, b))) {
          // Skip blocks whose current residual would push them off the kink.
          kinks->project(yb, moved);
          kinks->gradient(yb, kink_grad);
          for (std::size_t c = 0; c < bd; ++c) target[c] = kink_grad[c] - grad[b * bd + c];
          if (!kinks->closest_subgradient(moved, target, closest)) continue;
          std::copy(moved.begin(), moved.end(), snapped.begin() + b * bd);
          Snap s{b, b, Point(bd)};
          for (std::size_t c = 0; c < bd; ++c) s.shift[c] = snapped[b * bd + c] - eta[b * bd + c];
          snaps.push_back(std::move(s));
        }
      }
    }
    if (pair_kinks) {
      const auto& ps = pair_kinks->support;
      for (std::size_t i = 0; i < blocks; ++i) {
        const double gi = norm_of(block(grad, i));
        for (std::size_t j = i + 1; j < blocks; ++j) {
          for (std::size_t c = 0; c < bd; ++c) diff[c] = snapped[i * bd + c] - snapped[j * bd + c];
          if (ps.distance(diff) > 4.0 * gamma * (gi + norm_of(block(grad, j)))) continue;
          ps.project(diff, moved);
          ps.gradient(diff, kink_grad);
          for (std::size_t c = 0; c < bd; ++c) {
            target[c] = (grad[j * bd + c] - grad[i * bd + c]) / (2.0 * pair_kinks->weight) + kink_grad[c];
          }
          if (!ps.closest_subgradient(moved, target, closest)) continue;
          Snap s{i, j, Point(bd)};
          for (std::size_t c = 0; c < bd; ++c) {
            s.shift[c] = 0.5 * (moved[c] - diff[c]);
            snapped[i * bd + c] += s.shift[c];
            snapped[j * bd + c] -= s.shift[c];
          }
          snaps.push_back(std::move(s));
        }
      }
    }
    if (snaps.empty()) return false;
    snapped_grad.resize(n);
    // Second pass recomputes the gradient after snaps that cannot hold are undone.
    bool any = false;
    for (int pass = 0; pass < 2; ++pass) {
      objective.gradient(snapped, snapped_grad);
      bool restored = false;
      any = false;
      for (auto& s : snaps) {
        if (s.shift.empty()) continue;
        bool holds;
        if (s.i == s.j) {
          const std::span<const double> sb = block(snapped, s.i);
          const auto gb = block(snapped_grad, s.i);
          if (kinks->distance(sb) > 1e-12 * (1.0 + norm_of(sb))) continue;
          kinks->gradient(sb, kink_grad);
          for (std::size_t c = 0; c < bd; ++c) target[c] = kink_grad[c] - gb[c];
          holds = kinks->closest_subgradient(sb, target, closest);
          if (holds || pass == 1) {
            for (std::size_t c = 0; c < bd; ++c) gb[c] = closest[c] - target[c];
          }
        } else {
          // Later snaps may have pulled this pair off its kink again.
          const auto& ps = pair_kinks->support;
          const double w = pair_kinks->weight;
          for (std::size_t c = 0; c < bd; ++c) diff[c] = snapped[s.i * bd + c] - snapped[s.j * bd + c];
          if (ps.distance(diff) > 1e-12 * (1.0 + norm_of(diff))) continue;
          const auto gi = block(snapped_grad, s.i);
          const auto gj = block(snapped_grad, s.j);
          ps.gradient(diff, kink_grad);
          // Residuals without this pair are r_i = g_i - w f', r_j = g_j + w f'; the
          // pair adds +w c and -w c, best with c closest to (r_j - r_i) / (2w).
          for (std::size_t c = 0; c < bd; ++c) target[c] = (gj[c] - gi[c]) / (2.0 * w) + kink_grad[c];
          holds = ps.closest_subgradient(diff, target, closest);
          if (holds || pass == 1) {
            for (std::size_t c = 0; c < bd; ++c) {
              gi[c] += w * (closest[c] - kink_grad[c]);
              gj[c] -= w * (closest[c] - kink_grad[c]);
            }
          }
        }
        if (!holds && pass == 0) {
          for (std::size_t c = 0; c < bd; ++c) {
            snapped[s.i * bd + c] -= s.shift[c];
            if (s.j != s.i) snapped[s.j * bd + c] += s.shift[c];
          }
          s.shift.clear();
          restored = true;
          continue;
        }
        any = any || holds;
      }
      if (!restored) break;
    }
    if (!any) return false;
    const double p_snapped = objective.value(snapped);
    if (!(p_snapped <= p_eta + 1e-14 * (1.0 + std::abs(p_eta)))) return false;
    eta.swap(snapped);
    grad.swap(snapped_grad);
    p_eta = p_snapped;
    grad_norm = std::sqrt(dot(grad, grad));
    return true;
  };

  while (grad_norm > cfg.grad_tol) {
    if (result.iterations >= cfg.max_iters) {
      throw ProxFailure(ProxFailure::Kind::max_iters_exceeded,
                        fmt::format("{}: gradient norm {:.3e} above tolerance {:.3e} after {} steps",
                                    p.id(), grad_norm, cfg.grad_tol, cfg.max_iters));
    }
    if ((kinks || pair_kinks) && snap_to_kinks()) {
      ++result.iterations;
      if (opts.record_trace) result.trace.push_back(eta);
      if (grad_norm <= cfg.grad_tol) break;
    }
    for (std::size_t i = 0; i < n; ++i) trial[i] = eta[i] - gamma * grad[i];
    const double p_trial = objective.value(trial);
    // Both acceptance tests, with an allowance for rounding in P itself.
    const double slack = 1e-14 * (1.0 + std::abs(p_eta));
    const double step_sq = gamma * gamma * grad_norm * grad_norm;
    const double upper = p_eta - gamma * grad_norm * grad_norm + step_sq / (2.0 * gamma);
    if (std::isfinite(p_trial) && p_trial <= v_at_anchor + slack && p_trial <= upper + slack) {
      eta.swap(trial);
      p_eta = p_trial;
      objective.gradient(eta, grad);
      grad_norm = std::sqrt(dot(grad, grad));
      ++result.iterations;
      if (opts.record_trace) result.trace.push_back(eta);
    } else {
      gamma *= cfg.shrink;
      if (gamma < kMinGamma) {
        throw ProxFailure(ProxFailure::Kind::step_underflow,
                          fmt::format("{}: step size underflow at gradient norm {:.3e}", p.id(),
                                      grad_norm));
      }
    }
  }
  if (opts.gamma_state) *opts.gamma_state = gamma;
  result.point = std::move(eta);
  result.final_gamma = gamma;
  result.residual = grad_norm;
  return result;
}

ProxResult prox(const Potential& p, std::span<const double> x, double tau, const ProxConfig& cfg,
                const BacktrackingOptions& opts) {
  if (p.has_exact_prox()) {
    ProxResult result;
    result.point.resize(x.size());
    p.exact_prox(x, tau, result.point);
    result.final_gamma = cfg.gamma0;
    if (opts.record_trace) result.trace = {Point(x.begin(), x.end()), result.point};
    return result;
  }
  return prox_backtracking(p, x, tau, cfg, opts);
}

}  // namespace granular
