#include "granular/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <fmt/core.h>

#include "granular/rng.hpp"

namespace granular {
namespace {

W2Report make_report(long double squared, W2Method method, std::size_t n) {
  W2Report r;
  r.squared = static_cast<double>(std::max(squared, 0.0L));
  r.distance = std::sqrt(r.squared);
  r.method = method;
  r.n_used = n;
  return r;
}

void require_same_count(PointSetView a, PointSetView b) {
  if (a.dim != b.dim) {
    throw std::invalid_argument(fmt::format("point sets have dimensions {} and {}", a.dim, b.dim));
  }
  if (a.count() != b.count()) {
    throw std::invalid_argument(
        fmt::format("point sets have {} and {} points; equal counts required", a.count(), b.count()));
  }
}

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s, const char* what) {
  if (s.rows() != s.cols()) throw std::invalid_argument(fmt::format("{} is not square", what));
  if (!s.isApprox(s.transpose(), 1e-12)) throw std::invalid_argument(fmt::format("{} is not symmetric", what));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  const double tol = 1e-12 * std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  if (eig.eigenvalues().minCoeff() < -tol) {
    throw std::invalid_argument(fmt::format("{} is not positive semidefinite", what));
  }
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace

std::string_view to_string(W2Method m) noexcept {
  switch (m) {
    case W2Method::sorted1d: return "sorted1d";
    case W2Method::quantile1d: return "quantile1d";
    case W2Method::assignment: return "assignment";
    case W2Method::subsampled: return "subsampled";
    case W2Method::gaussian_closed_form: return "gaussian_closed_form";
  }
  return "unknown";
}

W2Report w2_sorted_1d(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(
        fmt::format("w2_sorted_1d: {} and {} samples; equal counts required", a.size(), b.size()));
  }
  if (a.empty()) throw std::invalid_argument("w2_sorted_1d: empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  long double acc = 0.0L;
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const long double d = static_cast<long double>(sa[i]) - sb[i];
    acc += d * d;
  }
  return make_report(acc / static_cast<long double>(sa.size()), W2Method::sorted1d, sa.size());
}

W2Report w2_quantile_1d(std::span<const double> a, std::span<const double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("w2_quantile_1d: empty sample");
  std::vector<double> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  // Merge the breakpoints i/n and j/m exactly using integer cross-multiplication.
  const std::uint64_t n = sa.size();
  const std::uint64_t m = sb.size();
  std::uint64_t i = 0, j = 0;
  std::uint64_t prev = 0;  // current mass position in units of 1/(n m)
  long double acc = 0.0L;
  while (i < n && j < m) {
    const std::uint64_t next_a = (i + 1) * m;
    const std::uint64_t next_b = (j + 1) * n;
    const std::uint64_t next = std::min(next_a, next_b);
    const long double d = static_cast<long double>(sa[i]) - sb[j];
    acc += d * d * static_cast<long double>(next - prev);
    prev = next;
    if (next_a == next) ++i;
    if (next_b == next) ++j;
  }
  return make_report(acc / (static_cast<long double>(n) * m), W2Method::quantile1d,
                     std::max(sa.size(), sb.size()));
}

std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n) {
  if (cost.size() != n * n) throw std::invalid_argument("solve_assignment: cost is not n x n");
  // Shortest augmenting path with dual potentials (Hungarian method, O(n^3)).
  // Arrays are 1-based; column 0 is the virtual source.
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), min_slack(n + 1);
  std::vector<std::size_t> row_of_col(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t row = 1; row <= n; ++row) {
    row_of_col[0] = row;
    std::size_t col0 = 0;
    std::fill(min_slack.begin(), min_slack.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col0] = 1;
      const std::size_t r = row_of_col[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t c = 1; c <= n; ++c) {
        if (used[c]) continue;
        const double reduced = cost[(r - 1) * n + (c - 1)] - u[r] - v[c];
        if (reduced < min_slack[c]) {
          min_slack[c] = reduced;
          way[c] = col0;
        }
        if (min_slack[c] < delta) {
          delta = min_slack[c];
          col1 = c;
        }
      }
      for (std::size_t c = 0; c <= n; ++c) {
        if (used[c]) {
          u[row_of_col[c]] += delta;
          v[c] -= delta;
        } else {
          min_slack[c] -= delta;
        }
      }
      col0 = col1;
    } while (row_of_col[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      row_of_col[col0] = row_of_col[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<std::size_t> assignment(n);
  for (std::size_t c = 1; c <= n; ++c) assignment[row_of_col[c] - 1] = c - 1;
  return assignment;
}

W2Report w2_assignment(PointSetView a, PointSetView b) {
  require_same_count(a, b);
  const std::size_t n = a.count();
  if (n == 0) throw std::invalid_argument("w2_assignment: empty point set");
  if (n > kAssignmentCap) {
    throw std::invalid_argument(fmt::format(
        "w2_assignment: {} points exceeds the exact-solver cap of {}; use the subsampled estimator",
        n, kAssignmentCap));
  }
  std::vector<double> cost(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = a.point(i);
    for (std::size_t j = 0; j < n; ++j) {
      const auto y = b.point(j);
      double c = 0.0;
      for (std::size_t k = 0; k < a.dim; ++k) {
        const double d = x[k] - y[k];
        c += d * d;
      }
      cost[i * n + j] = c;
    }
  }
  const auto match = solve_assignment(cost, n);
  // Recompute the matched cost from coordinates in extended precision.
  long double acc = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    const auto x = a.point(i);
    const auto y = b.point(match[i]);
    for (std::size_t k = 0; k < a.dim; ++k) {
      const long double d = static_cast<long double>(x[k]) - y[k];
      acc += d * d;
    }
  }
  return make_report(acc / static_cast<long double>(n), W2Method::assignment, n);
}

W2Report w2_subsampled(PointSetView a, PointSetView b, std::size_t batch, std::size_t reps,
                       std::uint64_t seed) {
  if (a.dim != b.dim) throw std::invalid_argument("w2_subsampled: dimension mismatch");
  if (batch == 0 || reps == 0) throw std::invalid_argument("w2_subsampled: batch and reps must be positive");
  if (batch > std::min(a.count(), b.count())) {
    throw std::invalid_argument("w2_subsampled: batch exceeds the smaller point count");
  }
  if (batch > kAssignmentCap) {
    throw std::invalid_argument(
        fmt::format("w2_subsampled: batch {} exceeds the exact-solver cap of {}", batch, kAssignmentCap));
  }
  const std::size_t d = a.dim;
  auto draw = [&](PointSetView src, std::size_t rep, std::uint32_t which) {
    // Partial Fisher-Yates over indices, from a dedicated stream per (rep, side).
    rng::CounterStream stream({seed, rng::Purpose::subsample, which}, static_cast<std::uint32_t>(rep), 0);
    std::vector<std::size_t> idx(src.count());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    std::vector<double> out(batch * d);
    for (std::size_t k = 0; k < batch; ++k) {
      const std::size_t pick = k + static_cast<std::size_t>(stream.below(idx.size() - k));
      std::swap(idx[k], idx[pick]);
      const auto p = src.point(idx[k]);
      std::copy(p.begin(), p.end(), out.begin() + static_cast<std::ptrdiff_t>(k * d));
    }
    return out;
  };
  std::vector<double> distances(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto sa = draw(a, r, 0);
    const auto sb = draw(b, r, 1);
    distances[r] = (d == 1 ? w2_sorted_1d(sa, sb) : w2_assignment({sa, d}, {sb, d})).distance;
  }
  const double mean = std::accumulate(distances.begin(), distances.end(), 0.0) / static_cast<double>(reps);
  W2Report report;
  report.distance = mean;
  report.squared = mean * mean;
  report.method = W2Method::subsampled;
  report.n_used = batch;
  if (reps >= 2) {
    double ss = 0.0;
    for (double x : distances) ss += (x - mean) * (x - mean);
    report.std_error = std::sqrt(ss / static_cast<double>(reps - 1) / static_cast<double>(reps));
  }
  return report;
}

W2Report w2_gaussian(const Eigen::VectorXd& m1, const Eigen::MatrixXd& s1,
                     const Eigen::VectorXd& m2, const Eigen::MatrixXd& s2) {
  const auto d = m1.size();
  if (m2.size() != d || s1.rows() != d || s2.rows() != d) {
    throw std::invalid_argument("w2_gaussian: dimension mismatch");
  }
  const Eigen::MatrixXd root1 = psd_sqrt(s1, "first covariance");
  psd_sqrt(s2, "second covariance");
  Eigen::MatrixXd cross = root1 * s2 * root1;
  cross = 0.5 * (cross + cross.transpose());
  const Eigen::MatrixXd cross_root = psd_sqrt(cross, "cross term");
  const double trace_term = (s1 + s2 - 2.0 * cross_root).trace();
  const double squared = (m1 - m2).squaredNorm() + std::max(trace_term, 0.0);
  W2Report r = make_report(squared, W2Method::gaussian_closed_form, 0);
  return r;
}

double empirical_moment(PointSetView points, double a) {
  if (!(a >= 0.0)) throw std::invalid_argument("moment order must be nonnegative");
  const std::size_t n = points.count();
  if (n == 0) throw std::invalid_argument("empirical_moment: no points");
  long double acc = 0.0L;
  for (std::size_t i = 0; i < n; ++i) {
    double sq = 0.0;
    for (double c : points.point(i)) sq += c * c;
    if (a == 2.0) {
      acc += sq;
    } else if (a == 0.0) {
      acc += 1.0L;
    } else {
      acc += std::pow(std::sqrt(sq), a);
    }
  }
  return static_cast<double>(acc / static_cast<long double>(n));
}

}  // namespace granular
