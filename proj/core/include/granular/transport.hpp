#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>

#include <Eigen/Dense>

namespace granular {

/// Row-major N x d view of a point cloud.
struct PointSetView {
  std::span<const double> data;
  std::size_t dim = 1;

  std::size_t count() const noexcept { return dim == 0 ? 0 : data.size() / dim; }
  std::span<const double> point(std::size_t i) const { return data.subspan(i * dim, dim); }
};

enum class W2Method { sorted1d, quantile1d, assignment, subsampled, gaussian_closed_form };

std::string_view to_string(W2Method m) noexcept;

struct W2Report {
  double distance = 0.0;
  double squared = 0.0;
  W2Method method = W2Method::sorted1d;
  std::size_t n_used = 0;
  /// Standard error across replicates (subsampled estimator with reps >= 2).
  std::optional<double> std_error;
};

/// Largest point count accepted by the exact assignment solver.
inline constexpr std::size_t kAssignmentCap = 2048;

/// Exact W2 between equal-size 1D empirical measures (sort and pair order statistics).
W2Report w2_sorted_1d(std::span<const double> a, std::span<const double> b);

/// Exact W2 between 1D empirical measures of any sizes, integrating the squared
/// difference of the two step quantile functions.
W2Report w2_quantile_1d(std::span<const double> a, std::span<const double> b);

/// Exact W2 between equal-size empirical measures in any dimension via a
/// min-cost perfect matching on squared Euclidean cost.
W2Report w2_assignment(PointSetView a, PointSetView b);

/// Mean of exact W2 over `reps` pairs of random size-`batch` subsamples.
/// Note: subsamples of a and b are drawn independently, so a == b gives a
/// positive value (the subsampling self-distance), not zero.
W2Report w2_subsampled(PointSetView a, PointSetView b, std::size_t batch, std::size_t reps,
                       std::uint64_t seed);

/// Bures closed form for two Gaussians.
W2Report w2_gaussian(const Eigen::VectorXd& m1, const Eigen::MatrixXd& s1,
                     const Eigen::VectorXd& m2, const Eigen::MatrixXd& s2);

/// Mean over points of |x|^a.
double empirical_moment(PointSetView points, double a);

/// Minimum-cost perfect matching for a square row-major cost matrix.
/// Returns row -> column assignment.
std::vector<std::size_t> solve_assignment(std::span<const double> cost, std::size_t n);

}  // namespace granular
