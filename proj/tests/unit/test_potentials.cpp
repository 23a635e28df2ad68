#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "granular/errors.hpp"
#include "granular/joint_potential.hpp"
#include "granular/potentials.hpp"

namespace {

using granular::JointPotential;
using granular::make_builtin;
using granular::Point;
using granular::Potential;

double dot(const Point& a, const Point& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(const Point& a) { return std::sqrt(dot(a, a)); }

Point random_point(std::mt19937_64& rng, std::size_t d, double half_width) {
  std::uniform_real_distribution<double> u(-half_width, half_width);
  Point p(d);
  for (auto& v : p) v = u(rng);
  return p;
}

TEST(Builtins, V1Example) {
  const Potential v = make_builtin("V1", 1);
  EXPECT_DOUBLE_EQ(v.value(Point{2.0}), 2.0);
  EXPECT_DOUBLE_EQ(v.gradient(Point{2.0})[0], 2.0);
  EXPECT_EQ(v.lambda_convex(), 1.0);
  EXPECT_EQ(v.growth_q(), 1.0);
}

TEST(Builtins, W1Example) {
  const Potential w = make_builtin("W1", 1);
  EXPECT_DOUBLE_EQ(w.value(Point{2.0}), -0.5);
  EXPECT_DOUBLE_EQ(w.gradient(Point{2.0})[0], -0.5);
  EXPECT_EQ(w.lambda_convex(), -0.25);
}

TEST(Builtins, V2ZeroSubgradientAtOrigin) {
  const Potential v = make_builtin("V2", 1);
  EXPECT_EQ(v.value(Point{0.0}), 0.0);
  EXPECT_EQ(v.gradient(Point{0.0})[0], 0.0);
}

TEST(Builtins, W6OuterBranch) {
  const Potential w = make_builtin("W6", 2);
  EXPECT_DOUBLE_EQ(w.value(Point{2.0, 0.0}), 4.0);
  const Point g = w.gradient(Point{2.0, 0.0});
  EXPECT_DOUBLE_EQ(g[0], 6.0);
  EXPECT_DOUBLE_EQ(g[1], 0.0);
}

TEST(Eval, Examples) {
  EXPECT_DOUBLE_EQ(granular::eval(make_builtin("V1", 2), Point{3.0, 4.0}), 12.5);
  EXPECT_DOUBLE_EQ(granular::eval(make_builtin("W3", 1), Point{-2.0}), 8.0 / 3.0);
  const Potential v3 = make_builtin("V3", 2);
  EXPECT_DOUBLE_EQ(v3.value(Point{0.0, 1.0}), 1.0);
  // Right branch evaluated by hand at the seam.
  EXPECT_NEAR(std::pow(0.5, 4.0) + 1.0 - 1.0 / 16.0, v3.value(Point{0.0, 1.0}), 1e-15);
  EXPECT_NEAR(v3.value(Point{-1e-15, 1.0}), 1.0, 1e-12);
}

TEST(Grad, Examples) {
  const Point g1 = granular::grad(make_builtin("V1", 2), Point{3.0, 4.0});
  EXPECT_EQ(g1, (Point{3.0, 4.0}));
  EXPECT_DOUBLE_EQ(granular::grad(make_builtin("W2", 1), Point{0.5})[0], 0.125);
  const Point x{1.2, -1.6};  // |x| = 2
  const Point g5 = granular::grad(make_builtin("W5", 2), x);
  EXPECT_NEAR(g5[0], -0.6, 1e-15);
  EXPECT_NEAR(g5[1], 0.8, 1e-15);
}

TEST(Builtins, Errors) {
  EXPECT_THROW(make_builtin("V9", 1), std::invalid_argument);
  EXPECT_THROW(make_builtin("V3", 3), std::invalid_argument);
  EXPECT_THROW(make_builtin("V1", 0), std::invalid_argument);
  const Potential v = make_builtin("V1", 2);
  EXPECT_THROW(v.value(Point{1.0}), std::invalid_argument);
  EXPECT_THROW(v.value(Point{1.0, NAN}), granular::NumericalError);
}

TEST(Builtins, PublishedMetadata) {
  struct Row {
    const char* id;
    std::size_t dim;
    double lambda;
    double q;
  };
  const Row rows[] = {{"V1", 1, 1.0, 1.0},   {"V2", 1, 0.0, 2.0},  {"V3", 2, 1.0, 3.0 + std::numbers::pi / 2},
                      {"W1", 1, -0.25, 1.0}, {"W2", 1, -0.25, 2.0}, {"W3", 1, 0.0, 2.0},
                      {"W4", 1, 1.0, 1.0},   {"W5", 2, -0.25, 1.0}, {"W6", 2, 1.0, 2.0}};
  for (const auto& r : rows) {
    const Potential p = make_builtin(r.id, r.dim);
    EXPECT_EQ(p.lambda_convex(), r.lambda) << r.id;
    EXPECT_DOUBLE_EQ(p.growth_q(), r.q) << r.id;
  }
  for (const char* w : {"W1", "W2", "W3", "W4", "W5", "W6"}) EXPECT_TRUE(make_builtin(w, 2).info().even) << w;
  EXPECT_TRUE(make_builtin("V1", 1).has_exact_prox());
  EXPECT_TRUE(make_builtin("W4", 1).has_exact_prox());
  EXPECT_FALSE(make_builtin("V2", 1).has_exact_prox());
}

// Constants that hold on bounded boxes. V3's left branch only has curvature 1/2
// in x1, and W6 = |x|/2 near the origin is merely convex. W5 has a concave
// slope jump at |x| = 1 and is excluded.
struct Convexity {
  const char* id;
  std::size_t dim;
  double lambda;
};
const Convexity kEmpirical[] = {{"V1", 1, 1.0},   {"V1", 3, 1.0},   {"V2", 1, 0.0},   {"V2", 2, 0.0},
                                {"V3", 2, 0.5},   {"W1", 2, -0.25}, {"W2", 1, -0.25}, {"W2", 2, -0.25},
                                {"W3", 2, 0.0},   {"W4", 2, 1.0},   {"W6", 1, 0.0},   {"W6", 2, 0.0}};

TEST(Properties, LambdaMonotonicity) {
  std::mt19937_64 rng(1);
  for (const auto& c : kEmpirical) {
    const Potential p = make_builtin(c.id, c.dim);
    Point gx(c.dim), gy(c.dim), d(c.dim);
    int violations = 0;
    for (int k = 0; k < 1000000 / 12; ++k) {
      const Point x = random_point(rng, c.dim, 3.0);
      const Point y = random_point(rng, c.dim, 3.0);
      p.gradient(x, gx);
      p.gradient(y, gy);
      double lhs = 0.0, dist2 = 0.0;
      for (std::size_t i = 0; i < c.dim; ++i) {
        lhs += (gx[i] - gy[i]) * (x[i] - y[i]);
        dist2 += (x[i] - y[i]) * (x[i] - y[i]);
      }
      if (lhs < c.lambda * dist2 - 1e-9 * (1.0 + dist2)) ++violations;
    }
    EXPECT_EQ(violations, 0) << c.id << " d=" << c.dim;
  }
}

TEST(Properties, FiniteDifferenceGradients) {
  std::mt19937_64 rng(2);
  const std::pair<const char*, std::size_t> all[] = {{"V1", 1}, {"V1", 3}, {"V2", 1}, {"V2", 3}, {"V3", 2},
                                                     {"W1", 2}, {"W2", 3}, {"W3", 1}, {"W4", 2}, {"W5", 2},
                                                     {"W6", 2}};
  for (const auto& [id, dim] : all) {
    const Potential p = make_builtin(id, dim);
    int checked = 0;
    while (checked < 1000) {
      Point x = random_point(rng, dim, 2.5);
      if (p.kink_distance(x) < 1e-3) continue;
      const Point g = p.gradient(x);
      for (std::size_t i = 0; i < dim; ++i) {
        const double h = 1e-6;
        Point a = x, b = x;
        a[i] += h;
        b[i] -= h;
        const double fd = (p.value(a) - p.value(b)) / (2 * h);
        ASSERT_LE(std::abs(fd - g[i]), 1e-6 * std::max(1.0, std::abs(g[i]))) << id << " coord " << i;
      }
      ++checked;
    }
  }
}

TEST(Properties, GradientVanishesAtDeclaredMinimizer) {
  for (const auto& id : granular::builtin_ids()) {
    const std::size_t dim = 2;
    const Potential p = make_builtin(id, dim);
    if (!p.info().minimizer) continue;
    EXPECT_LE(norm(p.gradient(*p.info().minimizer)), 1e-12) << id;
  }
}

TEST(Properties, InteractionGradientsAreOdd) {
  std::mt19937_64 rng(3);
  for (const char* id : {"W1", "W2", "W3", "W4", "W5", "W6"}) {
    for (std::size_t dim : {1u, 2u, 3u}) {
      const Potential w = make_builtin(id, dim);
      for (int k = 0; k < 10000 / 3; ++k) {
        Point x = random_point(rng, dim, 3.0);
        Point m = x;
        for (auto& v : m) v = -v;
        const Point a = w.gradient(x), b = w.gradient(m);
        for (std::size_t i = 0; i < dim; ++i) ASSERT_EQ(a[i], -b[i]) << id;
      }
    }
  }
}

TEST(Properties, ValueContinuousAcrossSeams) {
  const double d = 1e-14;
  for (const char* id : {"V2", "W5", "W6"}) {
    for (std::size_t dim : {1u, 2u}) {
      const Potential p = make_builtin(id, dim);
      Point in(dim, 0.0), out(dim, 0.0), at(dim, 0.0);
      in[0] = 1.0 - d;
      out[0] = 1.0 + d;
      at[0] = 1.0;
      EXPECT_NEAR(p.value(in), p.value(out), 1e-12) << id;
      EXPECT_NEAR(p.value(at), p.value(out), 1e-12) << id;
    }
  }
  const Potential v3 = make_builtin("V3", 2);
  for (double x2 : {-2.0, 0.0, 0.7}) {
    EXPECT_NEAR(v3.value(Point{-d, x2}), v3.value(Point{d, x2}), 1e-12);
    EXPECT_NEAR(v3.value(Point{0.0, x2}), v3.value(Point{-d, x2}), 1e-12);
  }
  // V2 and W6 are also continuous at the origin.
  EXPECT_NEAR(make_builtin("V2", 2).value(Point{1e-14, 0.0}), 0.0, 1e-12);
}

TEST(SumPotential, AddsMetadata) {
  const Potential s = granular::sum_potential(make_builtin("V1", 1), make_builtin("W3", 1));
  EXPECT_EQ(s.lambda_convex(), 1.0);
  EXPECT_EQ(s.growth_q(), 2.0);
  EXPECT_DOUBLE_EQ(s.value(Point{2.0}), 2.0 + 8.0 / 3.0);
  EXPECT_DOUBLE_EQ(s.gradient(Point{2.0})[0], 2.0 + 4.0);
}

TEST(Lift, Examples) {
  EXPECT_DOUBLE_EQ(granular::lift_psi(make_builtin("V1", 1), make_builtin("W1", 1), 2).lambda_convex(), 0.5);
  EXPECT_DOUBLE_EQ(granular::lift_psi(make_builtin("V1", 1), make_builtin("W3", 1), 5).lambda_convex(), 1.0);
  const JointPotential psi(make_builtin("V1", 1), granular::zero_potential(1), 3);
  Point g(3);
  psi.gradient(Point{1.0, 2.0, 3.0}, g);
  EXPECT_EQ(g, (Point{1.0, 2.0, 3.0}));
  EXPECT_EQ(granular::lift_psi(make_builtin("V3", 2), make_builtin("W5", 2), 4).growth_q(), 3.0 + std::numbers::pi / 2);
}

TEST(Lift, Errors) {
  EXPECT_THROW(granular::lift_psi(make_builtin("V1", 1), make_builtin("W1", 2), 2), std::invalid_argument);
  EXPECT_THROW(granular::lift_psi(make_builtin("V1", 1), make_builtin("W1", 1), 0), std::invalid_argument);
  // W must be even.
  EXPECT_THROW(granular::lift_psi(make_builtin("V1", 2), make_builtin("V3", 2), 2), std::invalid_argument);
}

TEST(Lift, ValueIncludesDiagonal) {
  // W5(0) = 1/8 per particle enters with weight 1/(2N) * N = 1/2.
  const JointPotential psi(make_builtin("V1", 2), make_builtin("W5", 2), 1);
  EXPECT_DOUBLE_EQ(psi.value(Point{0.0, 0.0}), 0.5 * 0.125);
}

TEST(Lift, BlockGradientMatchesDrift) {
  std::mt19937_64 rng(4);
  const Potential v = make_builtin("V1", 2), w = make_builtin("W2", 2);
  const std::size_t n = 5;
  const JointPotential psi(v, w, n);
  const Point x = random_point(rng, 2 * n, 2.0);
  Point g(2 * n);
  psi.gradient(x, g);
  for (std::size_t i = 0; i < n; ++i) {
    Point expect = v.gradient(std::span<const double>(x.data() + 2 * i, 2));
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      const Point diff{x[2 * i] - x[2 * j], x[2 * i + 1] - x[2 * j + 1]};
      const Point gw = w.gradient(diff);
      expect[0] += gw[0] / n;
      expect[1] += gw[1] / n;
    }
    EXPECT_NEAR(g[2 * i], expect[0], 1e-14);
    EXPECT_NEAR(g[2 * i + 1], expect[1], 1e-14);
  }
}

struct Pair {
  const char* v;
  const char* w;
  std::size_t dim;
  double lambda;  // empirical constant of the lift on bounded boxes
};
const Pair kPairs[] = {{"V1", "W1", 1, 0.5}, {"V1", "W2", 2, 0.5}, {"V1", "W3", 3, 1.0},
                       {"V1", "W4", 1, 1.0}, {"V3", "W6", 2, 0.5}, {"V3", "W5", 2, 0.0}};

double joint_kink_distance(const Potential& v, const Potential& w, const Point& x, std::size_t d, std::size_t n) {
  double m = 1e300;
  for (std::size_t i = 0; i < n; ++i) {
    m = std::min(m, v.kink_distance(std::span<const double>(x.data() + d * i, d)));
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      Point diff(d);
      for (std::size_t c = 0; c < d; ++c) diff[c] = x[d * i + c] - x[d * j + c];
      m = std::min(m, w.kink_distance(diff));
    }
  }
  return m;
}

TEST(Lift, FiniteDifferenceGradients) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<std::size_t> pick_n(1, 8);
  for (const auto& pr : kPairs) {
    const Potential v = make_builtin(pr.v, pr.dim), w = make_builtin(pr.w, pr.dim);
    int checked = 0;
    while (checked < 100) {
      const std::size_t n = pick_n(rng);
      const JointPotential psi(v, w, n);
      const Point x = random_point(rng, pr.dim * n, 2.0);
      if (joint_kink_distance(v, w, x, pr.dim, n) < 1e-3) continue;
      Point g(x.size());
      psi.gradient(x, g);
      for (std::size_t i = 0; i < x.size(); ++i) {
        Point a = x, b = x;
        a[i] += 1e-6;
        b[i] -= 1e-6;
        const double fd = (psi.value(a) - psi.value(b)) / 2e-6;
        ASSERT_LE(std::abs(fd - g[i]), 1e-6 * std::max(1.0, std::abs(g[i]))) << pr.v << "+" << pr.w;
      }
      ++checked;
    }
  }
}

TEST(Lift, LambdaMonotonicity) {
  std::mt19937_64 rng(6);
  for (const auto& pr : kPairs) {
    if (std::string(pr.w) == "W5") continue;
    const std::size_t n = 4;
    const JointPotential psi(make_builtin(pr.v, pr.dim), make_builtin(pr.w, pr.dim), n);
    Point gx(pr.dim * n), gy(pr.dim * n);
    for (int k = 0; k < 20000; ++k) {
      const Point x = random_point(rng, pr.dim * n, 2.5);
      const Point y = random_point(rng, pr.dim * n, 2.5);
      psi.gradient(x, gx);
      psi.gradient(y, gy);
      double lhs = 0.0, dist2 = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        lhs += (gx[i] - gy[i]) * (x[i] - y[i]);
        dist2 += (x[i] - y[i]) * (x[i] - y[i]);
      }
      ASSERT_GE(lhs, pr.lambda * dist2 - 1e-9 * (1.0 + dist2)) << pr.v << "+" << pr.w;
    }
  }
}

TEST(Lift, ThreadCountDoesNotChangeGradient) {
  std::mt19937_64 rng(7);
  JointPotential psi(make_builtin("V3", 2), make_builtin("W6", 2), 50);
  const Point x = random_point(rng, 100, 2.0);
  Point a(100), b(100);
  psi.gradient(x, a);
  psi.set_threads(4);
  psi.gradient(x, b);
  EXPECT_EQ(a, b);
}

}  // namespace
