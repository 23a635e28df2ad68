#include "granular/joint_potential.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <fmt/core.h>

#include "granular/errors.hpp"
#include "granular/parallel.hpp"

namespace granular {

JointPotential::JointPotential(Potential v, Potential w, std::size_t n_particles)
    : v_(std::move(v)), w_(std::move(w)), n_(n_particles) {
  if (n_ == 0) throw std::invalid_argument("lift_psi: need at least one particle");
  if (v_.dim() != w_.dim()) {
    throw std::invalid_argument(
        fmt::format("lift_psi: V has dimension {} but W has {}", v_.dim(), w_.dim()));
  }
  if (!w_.info().even) throw std::invalid_argument("lift_psi: W must be even");
}

double JointPotential::lambda_convex() const noexcept {
  const double lv = v_.lambda_convex();
  return std::min(lv, lv + 2.0 * w_.lambda_convex());
}

double JointPotential::growth_q() const noexcept {
  return std::max(v_.growth_q(), w_.growth_q());
}

bool JointPotential::interacting() const noexcept {
  return !(w_.info().quadratic_curvature && *w_.info().quadratic_curvature == 0.0);
}

void JointPotential::check(std::span<const double> x) const {
  if (x.size() != total_dim()) {
    throw std::invalid_argument(
        fmt::format("joint state has {} coordinates, expected {}", x.size(), total_dim()));
  }
  for (double c : x) {
    if (!std::isfinite(c)) throw NumericalError("joint state is not finite");
  }
}

double JointPotential::value(std::span<const double> x) const {
  check(x);
  const std::size_t d = dim_per_particle();
  std::vector<double> diff(d, 0.0);
  double confinement = 0.0;
  for (std::size_t i = 0; i < n_; ++i) confinement += v_.value_unchecked(x.subspan(i * d, d));
  const double w0 = w_.value_unchecked(diff);
  if (!interacting()) return confinement + static_cast<double>(n_) * w0 / 2.0;

  // W is even: sum over i < j, doubled, plus the N diagonal terms W(0).
  const auto profile = w_.radial_profile();
  double off_diagonal = 0.0;
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t j = i + 1; j < n_; ++j) {
      double r2 = 0.0;
      for (std::size_t c = 0; c < d; ++c) {
        diff[c] = x[i * d + c] - x[j * d + c];
        r2 += diff[c] * diff[c];
      }
      off_diagonal += profile ? profile(std::sqrt(r2)) : w_.value_unchecked(diff);
    }
  }
  const double interaction = 2.0 * off_diagonal + static_cast<double>(n_) * w0;
  return confinement + interaction / (2.0 * static_cast<double>(n_));
}

void JointPotential::gradient(std::span<const double> x, std::span<double> out) const {
  check(x);
  if (out.size() != total_dim()) throw std::invalid_argument("joint gradient output has wrong size");
  const std::size_t d = dim_per_particle();
  const double inv_n = 1.0 / static_cast<double>(n_);
  const bool pairwise = interacting();
  const auto slope = w_.radial_slope();

  // grad W(x^i - x^j) for j > i, reused with a sign flip for (j, i).
  const bool cache = pairwise && n_ <= kPairCacheLimit;
  std::vector<double> pairs;
  auto pair_gradient = [&](std::size_t i, std::size_t j, double* g, double* diff) {
    double r2 = 0.0;
    for (std::size_t c = 0; c < d; ++c) {
      diff[c] = x[i * d + c] - x[j * d + c];
      r2 += diff[c] * diff[c];
    }
    if (slope) {
      const double r = std::sqrt(r2);
      const double s = r > 0.0 ? slope(r) / r : 0.0;
      for (std::size_t c = 0; c < d; ++c) g[c] = s * diff[c];
    } else {
      w_.gradient_unchecked(std::span<const double>(diff, d), std::span<double>(g, d));
    }
  };
  auto row_offset = [&](std::size_t i) { return (i * (2 * n_ - i - 1) / 2) * d; };
  if (cache) {
    pairs.resize(n_ * (n_ - 1) / 2 * d);
    parallel_for(n_, threads_, [&](std::size_t begin, std::size_t end) {
      std::vector<double> diff(d);
      for (std::size_t i = begin; i < end; ++i) {
        double* row = pairs.data() + row_offset(i);
        for (std::size_t j = i + 1; j < n_; ++j) pair_gradient(i, j, row + (j - i - 1) * d, diff.data());
      }
    });
  }
  parallel_for(n_, threads_, [&](std::size_t begin, std::size_t end) {
    std::vector<double> diff(d), gw(d), acc(d);
    for (std::size_t i = begin; i < end; ++i) {
      const auto xi = x.subspan(i * d, d);
      auto gi = out.subspan(i * d, d);
      v_.gradient_unchecked(xi, gi);
      if (!pairwise) continue;
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t j = 0; j < n_; ++j) {
        if (j == i) continue;
        if (cache) {
          if (j < i) {
            const double* g = pairs.data() + row_offset(j) + (i - j - 1) * d;
            for (std::size_t c = 0; c < d; ++c) acc[c] -= g[c];
          } else {
            const double* g = pairs.data() + row_offset(i) + (j - i - 1) * d;
            for (std::size_t c = 0; c < d; ++c) acc[c] += g[c];
          }
        } else {
          pair_gradient(i, j, gw.data(), diff.data());
          for (std::size_t c = 0; c < d; ++c) acc[c] += gw[c];
        }
      }
      for (std::size_t c = 0; c < d; ++c) gi[c] += inv_n * acc[c];
    }
  });
}

bool JointPotential::has_exact_prox() const noexcept {
  const auto& vi = v_.info();
  return vi.quadratic_curvature.has_value() && vi.minimizer.has_value() &&
         w_.info().quadratic_curvature.has_value();
}

void JointPotential::exact_prox(std::span<const double> x, double tau,
                                std::span<double> out) const {
  if (!has_exact_prox()) throw std::logic_error("joint potential has no closed-form prox");
  check(x);
  // With V = (a/2)|x - c|^2 and W = (b/2)|x|^2 the joint gradient is
  // a(x^i - c) + b(x^i - mean). The mean and the deviations decouple.
  const double a = *v_.info().quadratic_curvature;
  const double b = *w_.info().quadratic_curvature;
  const double mean_factor = 1.0 + tau * a;
  const double spread_factor = 1.0 + tau * (a + b);
  if (!(mean_factor > 0.0) || !(spread_factor > 0.0)) {
    throw NumericalError(fmt::format(
        "joint prox undefined: step {} exceeds the convexity range of {}+{}", tau, v_.id(), w_.id()));
  }
  const auto& center = *v_.info().minimizer;
  const std::size_t d = dim_per_particle();
  std::vector<double> mean(d, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t c = 0; c < d; ++c) mean[c] += x[i * d + c];
  }
  for (double& m : mean) m /= static_cast<double>(n_);
  for (std::size_t c = 0; c < d; ++c) {
    const double new_mean = center[c] + (mean[c] - center[c]) / mean_factor;
    for (std::size_t i = 0; i < n_; ++i) {
      out[i * d + c] = new_mean + (x[i * d + c] - mean[c]) / spread_factor;
    }
  }
}

Potential JointPotential::as_potential() const {
  PotentialInfo info;
  info.id = fmt::format("Psi[{},{};N={}]", v_.id(), w_.id(), n_);
  info.dim = total_dim();
  info.lambda_convex = lambda_convex();
  info.growth_q = growth_q();
  const JointPotential self = *this;
  Potential::ProxFn prox;
  if (has_exact_prox()) {
    prox = [self](std::span<const double> x, double tau, std::span<double> out) {
      self.exact_prox(x, tau, out);
    };
  }
  Potential psi(
      std::move(info), [self](std::span<const double> x) { return self.value(x); },
      [self](std::span<const double> x, std::span<double> out) { self.gradient(x, out); },
      std::move(prox));
  // Kinks of V repeat in every particle block; kinks of W sit on pair differences.
  if (v_.kinks()) psi.set_kinks(*v_.kinks());
  if (w_.kinks() && interacting()) {
    psi.set_pair_kinks({*w_.kinks(), 1.0 / static_cast<double>(n_)});
  }
  return psi;
}

JointPotential lift_psi(const Potential& v, const Potential& w, std::size_t n) {
  return JointPotential(v, w, n);
}

}  // namespace granular
