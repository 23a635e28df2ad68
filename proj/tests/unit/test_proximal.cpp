#include <cmath>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "granular/joint_potential.hpp"
#include "granular/potentials.hpp"
#include "granular/proximal.hpp"

namespace {

using granular::make_builtin;
using granular::Point;
using granular::Potential;
using granular::ProxConfig;

double norm(std::span<const double> a) {
  double s = 0.0;
  for (double v : a) s += v * v;
  return std::sqrt(s);
}

// Root of a increasing function on [lo, hi].
template <class F>
double bisect(F f, double lo, double hi) {
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) > 0.0 ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

// |grad P_x(y)| with the gradient selection of p.
double stationarity(const Potential& p, std::span<const double> x, std::span<const double> y,
                    double tau) {
  Point g = p.gradient(y);
  for (std::size_t i = 0; i < g.size(); ++i) g[i] += (y[i] - x[i]) / tau;
  return norm(g);
}

TEST(ProxExact, Examples) {
  EXPECT_DOUBLE_EQ(granular::prox_exact_quadratic(Point{2.0}, 1.0, 1.0, Point{0.0})[0], 1.0);
  EXPECT_EQ(granular::prox_exact_quadratic(Point{0.0}, 1.0, 1.0, Point{0.0})[0], 0.0);
  const Point y = granular::prox_exact_quadratic(Point{3.0, 4.0}, 0.5, 2.0, Point{0.0, 0.0});
  EXPECT_DOUBLE_EQ(y[0], 1.5);
  EXPECT_DOUBLE_EQ(y[1], 2.0);
  // grad P_x(y) = lam y + (y - x) / tau vanishes.
  EXPECT_NEAR(2.0 * y[0] + (y[0] - 3.0) / 0.5, 0.0, 1e-12);
  EXPECT_NEAR(2.0 * y[1] + (y[1] - 4.0) / 0.5, 0.0, 1e-12);
}

TEST(ProxExact, RejectsBadArguments) {
  EXPECT_THROW(granular::prox_exact_quadratic(Point{1.0}, 0.0, 1.0, Point{0.0}), std::invalid_argument);
  EXPECT_THROW(granular::prox_exact_quadratic(Point{1.0}, 1.0, -1.0, Point{0.0}), std::invalid_argument);
  EXPECT_THROW(granular::prox_exact_quadratic(Point{NAN}, 1.0, 1.0, Point{0.0}),
               granular::NumericalError);
}

TEST(ProxConfigTest, Defaults) {
  const ProxConfig cfg = ProxConfig::defaults(0.1, 1.0);
  EXPECT_DOUBLE_EQ(cfg.gamma0, 0.1);
  EXPECT_DOUBLE_EQ(cfg.shrink, 0.5);
  EXPECT_EQ(cfg.max_iters, 500);
  EXPECT_DOUBLE_EQ(cfg.epsilon_target, 0.01);
  EXPECT_DOUBLE_EQ(cfg.grad_tol, 0.01 * (1.0 + 10.0));
}

TEST(ProxConfigTest, Validation) {
  ProxConfig cfg = ProxConfig::defaults(0.1, 1.0);
  cfg.shrink = 1.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = ProxConfig::defaults(0.1, 1.0);
  cfg.max_iters = 0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
  cfg = ProxConfig::defaults(0.1, 1.0);
  cfg.grad_tol = 0.0;
  EXPECT_THROW(cfg.validate(), std::invalid_argument);
}

TEST(ProxBacktracking, V1MatchesClosedForm) {
  const Potential v = make_builtin("V1", 1);
  ProxConfig cfg = ProxConfig::defaults(1.0, 1.0);
  cfg.grad_tol = 1e-10;
  const auto r = granular::prox_backtracking(v, Point{2.0}, 1.0, cfg);
  EXPECT_NEAR(r.point[0], 1.0, 1e-8);
  EXPECT_LE(r.residual, cfg.grad_tol);
}

TEST(ProxBacktracking, ZeroGradientNeedsNoIterations) {
  const Potential w = make_builtin("W3", 1);
  const auto r = granular::prox_backtracking(w, Point{0.0}, 0.5, ProxConfig::defaults(0.5, 0.0));
  EXPECT_EQ(r.iterations, 0);
  EXPECT_EQ(r.point[0], 0.0);
}

TEST(ProxBacktracking, V2OuterBranchOracle) {
  const Potential v = make_builtin("V2", 1);
  const double tau = 0.1;
  const ProxConfig cfg = ProxConfig::defaults(tau, v.lambda_convex());
  const auto r = granular::prox(v, Point{5.0}, tau, cfg);
  EXPECT_GT(r.iterations, 0);
  const double root = bisect([&](double y) { return y + tau * 1.5 * y * y - 5.0; }, 1.0, 5.0);
  EXPECT_NEAR(r.point[0], root, cfg.grad_tol / (v.lambda_convex() + 1.0 / tau));
}

TEST(ProxBacktracking, V2InnerBranchOracle) {
  // On 1/2 < |y| < 1 the stationarity equation is 1/2 + (y - x) / tau = 0.
  const Potential v = make_builtin("V2", 1);
  const double tau = 0.2;
  const ProxConfig cfg = ProxConfig::defaults(tau, 0.0);
  const auto r = granular::prox(v, Point{0.9}, tau, cfg);
  EXPECT_NEAR(r.point[0], 0.8, cfg.grad_tol * tau);
}

TEST(ProxBacktracking, V2SettlesOnOriginKink) {
  // |x| <= tau/2 is mapped to the origin by the prox of |x|/2.
  const Potential v = make_builtin("V2", 1);
  const double tau = 0.1;
  const ProxConfig cfg = ProxConfig::defaults(tau, 0.0);
  const auto r = granular::prox(v, Point{0.03}, tau, cfg);
  EXPECT_NEAR(r.point[0], 0.0, cfg.epsilon_target);
  EXPECT_LE(r.residual, cfg.grad_tol);
}

TEST(ProxBacktracking, V2SettlesOnUnitSphere) {
  // The slope of V2 jumps from 1/2 to 3/2 at |y| = 1: every x with
  // 1 + tau/2 <= |x| <= 1 + 3 tau/2 is mapped onto the unit sphere.
  const Potential v = make_builtin("V2", 2);
  const double tau = 0.1;
  const ProxConfig cfg = ProxConfig::defaults(tau, 0.0);
  const Point x{0.6 * 1.1, 0.8 * 1.1};
  const auto r = granular::prox(v, x, tau, cfg);
  EXPECT_NEAR(norm(r.point), 1.0, cfg.epsilon_target);
  EXPECT_NEAR(r.point[0] / r.point[1], 0.75, 1e-9);
}

TEST(ProxBacktracking, V3StaysOnSeam) {
  // Left of the seam the prox in x1 is x1 / (1 + tau/2); right of it the steep
  // branch pushes back. Small positive x1 lands exactly on x1 = 0.
  const Potential v = make_builtin("V3", 2);
  const double tau = 0.05;
  const ProxConfig cfg = ProxConfig::defaults(tau, 0.5);
  const auto r = granular::prox(v, Point{0.005, 1.0}, tau, cfg);
  EXPECT_NEAR(r.point[0], 0.0, cfg.epsilon_target);
  EXPECT_NEAR(r.point[1], 1.0 / (1.0 + 2.0 * tau), cfg.epsilon_target);
}

TEST(ProxBacktracking, TraceIsMonotoneInObjective) {
  const Potential v = granular::sum_potential(make_builtin("V1", 1), make_builtin("W3", 1));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> ux(-4.0, 4.0), ut(0.05, 0.9);
  for (int trial = 0; trial < 50; ++trial) {
    const Point x{ux(rng)};
    const double tau = ut(rng);
    granular::BacktrackingOptions opts;
    opts.record_trace = true;
    const auto r = granular::prox_backtracking(v, x, tau, ProxConfig::defaults(tau, 1.0), opts);
    ASSERT_EQ(r.trace.size(), static_cast<std::size_t>(r.iterations) + 1);
    auto objective = [&](const Point& y) {
      return v.value(y) + (y[0] - x[0]) * (y[0] - x[0]) / (2.0 * tau);
    };
    for (std::size_t l = 1; l < r.trace.size(); ++l) {
      EXPECT_LE(objective(r.trace[l]), objective(r.trace[l - 1]) + 1e-12);
      EXPECT_LE(objective(r.trace[l]), v.value(x) + 1e-12);
    }
  }
}

TEST(ProxBacktracking, GeometricDecayOnCompositePotential) {
  // V(y) = y^2/2 + |y|^3/3, lambda = 1. Stationarity y + y|y| + (y - x)/tau = 0.
  const Potential v = granular::sum_potential(make_builtin("V1", 1), make_builtin("W3", 1));
  for (double x0 : {3.0, -2.0, 0.7}) {
    for (double tau : {0.5, 0.1}) {
      const double star = bisect([&](double y) { return y + y * std::abs(y) + (y - x0) / tau; },
                                 -std::abs(x0), std::abs(x0));
      ProxConfig cfg = ProxConfig::defaults(tau, 1.0);
      cfg.grad_tol = 1e-11;
      granular::BacktrackingOptions opts;
      opts.record_trace = true;
      const auto r = granular::prox_backtracking(v, Point{x0}, tau, cfg, opts);
      const double rate = 1.0 - r.final_gamma * (1.0 + 1.0 / tau);
      ASSERT_GT(rate, 0.0);
      ASSERT_LT(rate, 1.0);
      const double e0 = (x0 - star) * (x0 - star);
      for (std::size_t l = 0; l < r.trace.size(); ++l) {
        const double el = (r.trace[l][0] - star) * (r.trace[l][0] - star);
        EXPECT_LE(el, std::pow(rate, static_cast<double>(l)) * e0 + 1e-20) << "x=" << x0 << " l=" << l;
      }
    }
  }
}

TEST(ProxBacktracking, ExactAndIterativeAgree) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> ux(-5.0, 5.0), ut(0.01, 0.99);
  const Potential v1 = make_builtin("V1", 3);
  const Potential w4 = make_builtin("W4", 3);
  for (int trial = 0; trial < 200; ++trial) {
    const Point x{ux(rng), ux(rng), ux(rng)};
    const double tau = ut(rng);
    const ProxConfig cfg = ProxConfig::defaults(tau, 1.0);
    for (const Potential* p : {&v1, &w4}) {
      const auto it = granular::prox_backtracking(*p, x, tau, cfg);
      const Point exact = granular::prox_exact_quadratic(x, tau, 1.0, Point{0.0, 0.0, 0.0});
      Point diff(3);
      for (int c = 0; c < 3; ++c) diff[c] = it.point[c] - exact[c];
      EXPECT_LE(norm(diff), it.residual / (1.0 + 1.0 / tau) + 1e-14);
    }
  }
}

TEST(ProxDispatch, ExactWhenAvailable) {
  const Potential v = make_builtin("V1", 1);
  const auto r = granular::prox(v, Point{2.0}, 1.0, ProxConfig::defaults(1.0, 1.0));
  EXPECT_EQ(r.iterations, 0);
  EXPECT_DOUBLE_EQ(r.point[0], 1.0);
}

TEST(ProxContraction, MinimizerAtOriginPullsInward) {
  // Convexity constants: V1 1, V2 0, V3 1/2 (its left branch has curvature 1/2 in x1).
  struct Case {
    const char* id;
    std::size_t dim;
    double lambda;
    double tau_max;
  };
  std::mt19937_64 rng(17);
  for (const Case& c : {Case{"V1", 2, 1.0, 1.0}, Case{"V2", 2, 0.0, 1.0}, Case{"V3", 2, 0.5, 2.0}}) {
    const Potential v = make_builtin(c.id, c.dim);
    std::uniform_real_distribution<double> ux(-3.0, 3.0), ut(1e-3, c.tau_max);
    for (int trial = 0; trial < 300; ++trial) {
      Point x(c.dim);
      for (auto& xi : x) xi = ux(rng);
      double tau = ut(rng);
      if (tau >= c.tau_max) tau = 0.999 * c.tau_max;
      ProxConfig cfg = ProxConfig::defaults(tau, c.lambda);
      // With tau near 2, V3's steep right branch forces tiny steps against a
      // modulus near 1: thousands of iterations.
      cfg.max_iters = 100000;
      const auto r = granular::prox(v, x, tau, cfg);
      EXPECT_LE(norm(r.point), norm(x) / (1.0 + tau * c.lambda) + 2.0 * tau * tau)
          << c.id << " tau=" << tau;
    }
  }
}

TEST(ProxBacktracking, WarmStartKeepsShrunkStep) {
  const Potential v = make_builtin("V2", 1);
  double gamma = 0.0;
  granular::BacktrackingOptions opts;
  opts.gamma_state = &gamma;
  const auto first = granular::prox_backtracking(v, Point{5.0}, 0.1, ProxConfig::defaults(0.1, 0.0), opts);
  EXPECT_EQ(gamma, first.final_gamma);
  EXPECT_LT(gamma, 0.1);
  const auto second = granular::prox_backtracking(v, Point{4.0}, 0.1, ProxConfig::defaults(0.1, 0.0), opts);
  EXPECT_LE(second.final_gamma, first.final_gamma);
}

TEST(ProxBacktracking, MaxItersFailure) {
  const Potential v = make_builtin("V2", 1);
  ProxConfig cfg = ProxConfig::defaults(0.1, 0.0);
  cfg.max_iters = 1;
  cfg.grad_tol = 1e-14;
  try {
    granular::prox_backtracking(v, Point{5.0}, 0.1, cfg);
    FAIL() << "expected ProxFailure";
  } catch (const granular::ProxFailure& e) {
    EXPECT_EQ(e.kind(), granular::ProxFailure::Kind::max_iters_exceeded);
  }
}

TEST(ProxBacktracking, RequiresStrongConvexity) {
  const Potential w = make_builtin("W1", 1);  // lambda = -1/4
  EXPECT_THROW(granular::prox_backtracking(w, Point{1.0}, 5.0, ProxConfig::defaults(5.0, -0.25)),
               std::invalid_argument);
}

TEST(JointProx, SmoothPairSatisfiesStationarity) {
  const auto psi = granular::lift_psi(make_builtin("V1", 2), make_builtin("W2", 2), 6);
  const Potential p = psi.as_potential();
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  Point x(12);
  for (auto& v : x) v = 2.0 * n01(rng);
  const double tau = 0.05;
  const ProxConfig cfg = ProxConfig::defaults(tau, psi.lambda_convex());
  const auto r = granular::prox(p, x, tau, cfg);
  EXPECT_GT(r.iterations, 0);
  EXPECT_LE(stationarity(p, x, r.point, tau), cfg.grad_tol);
}

TEST(JointProx, QuadraticPairUsesClosedForm) {
  const auto psi = granular::lift_psi(make_builtin("V1", 1), make_builtin("W4", 1), 5);
  const Potential p = psi.as_potential();
  const Point x{1.0, -2.0, 0.5, 3.0, -1.5};
  const double tau = 0.1;
  const auto exact = granular::prox(p, x, tau, ProxConfig::defaults(tau, 1.0));
  EXPECT_EQ(exact.iterations, 0);
  EXPECT_LE(stationarity(p, x, exact.point, tau), 1e-12);
  ProxConfig cfg = ProxConfig::defaults(tau, psi.lambda_convex());
  cfg.grad_tol = 1e-12;
  const auto it = granular::prox_backtracking(p, x, tau, cfg);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(it.point[i], exact.point[i], 1e-12);
}

TEST(JointProx, AttractivePairsCollapseOntoKink) {
  // Two particles under W6 alone attract with force 1/2 each way while |x1 - x2| < 1:
  // an initial gap below tau/2 closes completely.
  const auto psi = granular::lift_psi(granular::zero_potential(1), make_builtin("W6", 1), 2);
  const Potential p = psi.as_potential();
  ASSERT_TRUE(p.pair_kinks().has_value());
  const double tau = 0.1;
  const Point x{0.01, -0.01};
  const ProxConfig cfg = ProxConfig::defaults(tau, 0.0);
  const auto r = granular::prox(p, x, tau, cfg);
  EXPECT_NEAR(r.point[0], 0.0, cfg.epsilon_target);
  EXPECT_NEAR(r.point[1], 0.0, cfg.epsilon_target);
  EXPECT_LE(r.residual, cfg.grad_tol);
}

TEST(JointProx, PlanarKinkedModelConverges) {
  const auto psi = granular::lift_psi(make_builtin("V3", 2), make_builtin("W6", 2), 8);
  const Potential p = psi.as_potential();
  std::mt19937_64 rng(23);
  std::normal_distribution<double> n01;
  const double tau = 1e-2;
  const ProxConfig cfg = ProxConfig::defaults(tau, psi.lambda_convex());
  for (int trial = 0; trial < 10; ++trial) {
    Point x(16);
    for (auto& v : x) v = 0.7 * n01(rng);
    const auto r = granular::prox(p, x, tau, cfg);
    EXPECT_LE(r.residual, cfg.grad_tol);
  }
}

}  // namespace
