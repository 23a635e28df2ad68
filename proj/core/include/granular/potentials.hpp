#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace granular {

using Point = std::vector<double>;

/// Metadata carried alongside a potential. The convexity and growth constants
/// are the published ones for the built-in catalog; they are not re-derived.
struct PotentialInfo {
  std::string id;
  std::size_t dim = 1;
  double lambda_convex = 0.0;
  double growth_q = 1.0;
  std::optional<Point> minimizer;
  /// W(-x) == W(x). Required of interaction potentials.
  bool even = false;
  /// Set when the potential is exactly (c/2)|x - minimizer|^2 (or (c/2)|x|^2
  /// for interaction potentials); enables closed-form joint proximal steps.
  std::optional<double> quadratic_curvature;
};

/// Description of where a potential is not differentiable, for proximal
/// solvers. The potential is read as sum_b f(y_b) + (smooth part) over
/// consecutive blocks y_b of length block_dim; f carries every kink.
struct KinkSupport {
  using BlockFn = std::function<void(std::span<const double>, std::span<double>)>;
  std::size_t block_dim = 1;
  /// Distance from a block to the kink set of f.
  std::function<double(std::span<const double>)> distance;
  /// Nearest point of the kink set.
  BlockFn project;
  /// The gradient selection f contributes at a block.
  BlockFn gradient;
  /// For a block on the kink set: writes the element of the subdifferential
  /// of f closest to `target`. Returns true when the component of target
  /// normal to the kink set lies inside the subdifferential, i.e. the kink can
  /// hold a minimizer.
  std::function<bool(std::span<const double>, std::span<const double>, std::span<double>)>
      closest_subgradient;
};

/// Kinks of an interaction term weight * sum_{i != j} f(y_i - y_j) / 2 over
/// blocks; `support` describes f in the difference variable.
struct PairKinkSupport {
  KinkSupport support;
  double weight = 1.0;
};

/// A potential on R^d: value, a gradient selection, and optional exact prox.
///
/// At non-differentiable points the gradient returns one fixed element of the
/// subdifferential (zero at the origin of |x|-type kinks, the outer branch on
/// radius-one seams).
class Potential {
 public:
  using ValueFn = std::function<double(std::span<const double>)>;
  using GradientFn = std::function<void(std::span<const double>, std::span<double>)>;
  using ProxFn = std::function<void(std::span<const double>, double, std::span<double>)>;
  using KinkFn = std::function<double(std::span<const double>)>;

  Potential(PotentialInfo info, ValueFn value, GradientFn gradient, ProxFn exact_prox = {},
            KinkFn kink_distance = {});

  const PotentialInfo& info() const noexcept { return info_; }
  const std::string& id() const noexcept { return info_.id; }
  std::size_t dim() const noexcept { return info_.dim; }
  double lambda_convex() const noexcept { return info_.lambda_convex; }
  double growth_q() const noexcept { return info_.growth_q; }

  /// Throws std::invalid_argument on a dimension mismatch and NumericalError on
  /// non-finite input.
  double value(std::span<const double> x) const;
  void gradient(std::span<const double> x, std::span<double> out) const;
  Point gradient(std::span<const double> x) const;

  bool has_exact_prox() const noexcept { return static_cast<bool>(exact_prox_); }
  void exact_prox(std::span<const double> x, double tau, std::span<double> out) const;

  /// Distance from x to the set where the potential is not C^1
  /// (+inf for smooth potentials). Used to keep finite-difference checks honest.
  double kink_distance(std::span<const double> x) const;

  /// Present for potentials whose convex kinks can hold a proximal minimizer.
  const std::optional<KinkSupport>& kinks() const noexcept { return kinks_; }
  void set_kinks(KinkSupport k) { kinks_ = std::move(k); }
  const std::optional<PairKinkSupport>& pair_kinks() const noexcept { return pair_kinks_; }
  void set_pair_kinks(PairKinkSupport k) { pair_kinks_ = std::move(k); }

  /// For radial potentials f(|x|): f'(r), letting pair loops skip the generic call.
  using SlopeFn = double (*)(double);
  SlopeFn radial_slope() const noexcept { return radial_slope_; }
  /// f(r) for radial potentials.
  SlopeFn radial_profile() const noexcept { return radial_value_; }
  void set_radial(SlopeFn value, SlopeFn slope) noexcept {
    radial_value_ = value;
    radial_slope_ = slope;
  }

  /// Unchecked evaluation for inner loops that already validated their input.
  double value_unchecked(std::span<const double> x) const { return value_(x); }
  void gradient_unchecked(std::span<const double> x, std::span<double> out) const {
    gradient_(x, out);
  }

 private:
  void check_point(std::span<const double> x) const;

  PotentialInfo info_;
  ValueFn value_;
  GradientFn gradient_;
  ProxFn exact_prox_;
  KinkFn kink_distance_;
  std::optional<KinkSupport> kinks_;
  std::optional<PairKinkSupport> pair_kinks_;
  SlopeFn radial_value_ = nullptr;
  SlopeFn radial_slope_ = nullptr;
};

/// Built-in catalog: "V1", "V2", "V3", "W1" ... "W6". V3 exists only for d = 2.
Potential make_builtin(std::string_view id, std::size_t dim);

/// All identifiers accepted by make_builtin, in catalog order.
const std::vector<std::string>& builtin_ids();

/// W == 0 on R^d.
Potential zero_potential(std::size_t dim);

/// Pointwise sum a + b. Convexity constants add; growth is the larger of the two.
Potential sum_potential(const Potential& a, const Potential& b);

inline double eval(const Potential& p, std::span<const double> x) { return p.value(x); }
inline Point grad(const Potential& p, std::span<const double> x) { return p.gradient(x); }

}  // namespace granular
