#include "granular/potentials.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

#include <fmt/core.h>

#include "granular/errors.hpp"

namespace granular {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double norm(std::span<const double> x) {
  double s = 0.0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

/// Radial potential f(|x|) with gradient f'(r) x / r and the zero vector at r = 0.
struct RadialProfile {
  double (*value)(double);
  double (*slope)(double);  // f'(r); evaluated only for r > 0
};

Potential make_radial(PotentialInfo info, RadialProfile profile, Potential::ProxFn prox = {},
                      Potential::KinkFn kinks = {}) {
  auto value = [f = profile.value](std::span<const double> x) { return f(norm(x)); };
  auto gradient = [df = profile.slope](std::span<const double> x, std::span<double> out) {
    const double r = norm(x);
    if (r == 0.0) {
      std::fill(out.begin(), out.end(), 0.0);
      return;
    }
    const double scale = df(r) / r;
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = scale * x[i];
  };
  info.even = true;
  Potential p(std::move(info), std::move(value), std::move(gradient), std::move(prox), std::move(kinks));
  p.set_radial(profile.value, profile.slope);
  return p;
}

Potential::ProxFn quadratic_prox(double curvature) {
  return [curvature](std::span<const double> x, double tau, std::span<double> out) {
    const double shrink = 1.0 / (1.0 + tau * curvature);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * shrink;
  };
}

double origin_and_unit_sphere(std::span<const double> x) {
  const double r = norm(x);
  return std::min(r, std::abs(r - 1.0));
}

Point origin(std::size_t dim) { return Point(dim, 0.0); }

/// Kinks of f(|x|) with f'(0+) = origin_slope > 0 and a slope jump from
/// seam_left to seam_right at |x| = 1. Only a convex jump can hold a minimizer.
KinkSupport radial_kinks(std::size_t dim, Potential::GradientFn gradient, double origin_slope,
                         double seam_left, double seam_right) {
  KinkSupport k;
  k.block_dim = dim;
  k.distance = origin_and_unit_sphere;
  k.project = [](std::span<const double> x, std::span<double> out) {
    const double r = norm(x);
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = r <= 0.5 ? 0.0 : x[i] / r;
  };
  k.gradient = std::move(gradient);
  k.closest_subgradient = [=](std::span<const double> y, std::span<const double> target,
                              std::span<double> out) {
    const double r = norm(y);
    if (r < 0.5) {
      // Subdifferential at the origin: the ball of radius origin_slope.
      const double t = norm(target);
      const double scale = t <= origin_slope ? 1.0 : origin_slope / t;
      for (std::size_t i = 0; i < y.size(); ++i) out[i] = scale * target[i];
      return t <= origin_slope;
    }
    double t = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) t += target[i] * y[i] / r;
    const double lo = std::min(seam_left, seam_right);
    const double hi = std::max(seam_left, seam_right);
    const double c = std::clamp(t, lo, hi);
    for (std::size_t i = 0; i < y.size(); ++i) out[i] = c * y[i] / r;
    return seam_left < seam_right && t >= lo && t <= hi;
  };
  return k;
}

Potential make_v3() {
  // Left branch (x1 < 0): x1^2/4 + x2^2. Right branch: (x1 + 1/2)^(4 + atan x1) + x2^2 - 1/16.
  // The two agree on x1 = 0. The partial in x1 jumps from 0 to (8 - ln 2)/16 across the
  // seam; 0 is selected there so the declared minimizer has a zero gradient.
  auto value = [](std::span<const double> x) {
    const double x1 = x[0];
    const double x2 = x[1];
    if (x1 >= 0.0) return std::pow(x1 + 0.5, 4.0 + std::atan(x1)) + x2 * x2 - 1.0 / 16.0;
    return 0.25 * x1 * x1 + x2 * x2;
  };
  auto gradient = [](std::span<const double> x, std::span<double> out) {
    const double x1 = x[0];
    if (x1 > 0.0) {
      const double base = x1 + 0.5;
      const double exponent = 4.0 + std::atan(x1);
      const double f = std::pow(base, exponent);
      out[0] = f * (std::log(base) / (1.0 + x1 * x1) + exponent / base);
    } else {
      out[0] = 0.5 * x1;
    }
    out[1] = 2.0 * x[1];
  };
  PotentialInfo info{"V3", 2, 1.0, 3.0 + std::numbers::pi / 2.0, origin(2), false, std::nullopt};
  Potential v(std::move(info), value, gradient, {},
              [](std::span<const double> x) { return std::abs(x[0]); });

  const double jump = (8.0 - std::log(2.0)) / 16.0;
  KinkSupport k;
  k.block_dim = 2;
  k.distance = [](std::span<const double> x) { return std::abs(x[0]); };
  k.project = [](std::span<const double> x, std::span<double> out) {
    out[0] = 0.0;
    out[1] = x[1];
  };
  k.gradient = gradient;
  k.closest_subgradient = [jump](std::span<const double> y, std::span<const double> target,
                                 std::span<double> out) {
    out[0] = std::clamp(target[0], 0.0, jump);
    out[1] = 2.0 * y[1];
    return target[0] >= 0.0 && target[0] <= jump;
  };
  v.set_kinks(std::move(k));
  return v;
}

}  // namespace

Potential::Potential(PotentialInfo info, ValueFn value, GradientFn gradient, ProxFn exact_prox,
                     KinkFn kink_distance)
    : info_(std::move(info)),
      value_(std::move(value)),
      gradient_(std::move(gradient)),
      exact_prox_(std::move(exact_prox)),
      kink_distance_(std::move(kink_distance)) {
  if (info_.dim == 0) throw std::invalid_argument("potential dimension must be positive");
  if (!value_ || !gradient_) throw std::invalid_argument("potential needs value and gradient");
}

void Potential::check_point(std::span<const double> x) const {
  if (x.size() != info_.dim) {
    throw std::invalid_argument(
        fmt::format("{}: expected a point of dimension {}, got {}", info_.id, info_.dim, x.size()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw NumericalError(fmt::format("{}: non-finite input", info_.id));
  }
}

double Potential::value(std::span<const double> x) const {
  check_point(x);
  return value_(x);
}

void Potential::gradient(std::span<const double> x, std::span<double> out) const {
  check_point(x);
  if (out.size() != info_.dim) throw std::invalid_argument("gradient output has wrong size");
  gradient_(x, out);
}

Point Potential::gradient(std::span<const double> x) const {
  Point g(info_.dim);
  gradient(x, g);
  return g;
}

void Potential::exact_prox(std::span<const double> x, double tau, std::span<double> out) const {
  if (!exact_prox_) throw std::logic_error(info_.id + " has no closed-form prox");
  check_point(x);
  if (!(tau > 0.0)) throw std::invalid_argument("prox step must be positive");
  exact_prox_(x, tau, out);
}

double Potential::kink_distance(std::span<const double> x) const {
  return kink_distance_ ? kink_distance_(x) : kInf;
}

const std::vector<std::string>& builtin_ids() {
  static const std::vector<std::string> ids{"V1", "V2", "V3", "W1", "W2",
                                            "W3", "W4", "W5", "W6"};
  return ids;
}

Potential make_builtin(std::string_view id, std::size_t dim) {
  if (dim == 0) throw std::invalid_argument("dimension must be at least 1");
  const std::string name(id);

  if (id == "V1") {
    return make_radial({name, dim, 1.0, 1.0, origin(dim), false, 1.0},
                       {[](double r) { return 0.5 * r * r; }, [](double r) { return r; }},
                       quadratic_prox(1.0));
  }
  if (id == "V2" || id == "W6") {
    const bool confinement = id == "V2";
    Potential p = make_radial(
        {name, dim, confinement ? 0.0 : 1.0, 2.0, origin(dim), false, std::nullopt},
        {[](double r) { return r <= 1.0 ? 0.5 * r : 0.5 * r * r * r; },
         [](double r) { return r < 1.0 ? 0.5 : 1.5 * r * r; }},
        {}, origin_and_unit_sphere);
    p.set_kinks(radial_kinks(dim, [p](std::span<const double> x, std::span<double> out) {
      p.gradient_unchecked(x, out);
    }, 0.5, 0.5, 1.5));
    return p;
  }
  if (id == "V3") {
    if (dim != 2) throw std::invalid_argument("V3 is defined only in dimension 2");
    return make_v3();
  }
  if (id == "W1") {
    return make_radial({name, dim, -0.25, 1.0, std::nullopt, true, -0.25},
                       {[](double r) { return -0.125 * r * r; }, [](double r) { return -0.25 * r; }});
  }
  if (id == "W2") {
    return make_radial({name, dim, -0.25, 2.0, std::nullopt, true, std::nullopt},
                       {[](double r) { return r * r * r / 3.0 - 0.125 * r * r; },
                        [](double r) { return r * r - 0.25 * r; }});
  }
  if (id == "W3") {
    return make_radial({name, dim, 0.0, 2.0, origin(dim), true, std::nullopt},
                       {[](double r) { return r * r * r / 3.0; }, [](double r) { return r * r; }});
  }
  if (id == "W4") {
    return make_radial({name, dim, 1.0, 1.0, origin(dim), true, 1.0},
                       {[](double r) { return 0.5 * r * r; }, [](double r) { return r; }},
                       quadratic_prox(1.0));
  }
  if (id == "W5") {
    // The published inner branch -|x|^2/8 + 1 meets the outer one 7/8 too high at
    // |x| = 1. Its constant is lowered to 1/8 so the value is continuous; gradients
    // are unchanged.
    return make_radial(
        {name, dim, -0.25, 1.0, std::nullopt, true, std::nullopt},
        {[](double r) { return r <= 1.0 ? -0.125 * r * r + 0.125 : -r + 1.0; },
         [](double r) { return r < 1.0 ? -0.25 * r : -1.0; }},
        {}, [](std::span<const double> x) { return std::abs(norm(x) - 1.0); });
  }
  throw std::invalid_argument(fmt::format("unknown potential '{}'", id));
}

Potential zero_potential(std::size_t dim) {
  PotentialInfo info{"0", dim, 0.0, 1.0, std::nullopt, true, 0.0};
  return Potential(
      std::move(info), [](std::span<const double>) { return 0.0; },
      [](std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); });
}

Potential sum_potential(const Potential& a, const Potential& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("sum_potential: dimension mismatch");
  PotentialInfo info;
  info.id = a.id() + "+" + b.id();
  info.dim = a.dim();
  info.lambda_convex = a.lambda_convex() + b.lambda_convex();
  info.growth_q = std::max(a.growth_q(), b.growth_q());
  info.even = a.info().even && b.info().even;
  if (a.info().minimizer && b.info().minimizer && *a.info().minimizer == *b.info().minimizer) {
    info.minimizer = a.info().minimizer;
  }
  auto value = [a, b](std::span<const double> x) {
    return a.value_unchecked(x) + b.value_unchecked(x);
  };
  auto gradient = [a, b](std::span<const double> x, std::span<double> out) {
    Point tmp(out.size());
    a.gradient_unchecked(x, out);
    b.gradient_unchecked(x, tmp);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += tmp[i];
  };
  auto kinks = [a, b](std::span<const double> x) {
    return std::min(a.kink_distance(x), b.kink_distance(x));
  };
  Potential sum(std::move(info), value, gradient, {}, kinks);
  // The smooth summand folds into the smooth part of the kink description.
  if (a.kinks() && !b.kinks()) sum.set_kinks(*a.kinks());
  if (b.kinks() && !a.kinks()) sum.set_kinks(*b.kinks());
  return sum;
}

}  // namespace granular
