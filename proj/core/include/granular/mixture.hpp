#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

namespace granular {

/// Finite mixture of Gaussians sum_k w_k N(m_k, S_k).
struct GaussianMixture {
  std::vector<double> weights;
  std::vector<Eigen::VectorXd> means;
  std::vector<Eigen::MatrixXd> covariances;

  std::size_t dim() const noexcept { return means.empty() ? 0 : static_cast<std::size_t>(means.front().size()); }
  std::size_t size() const noexcept { return weights.size(); }

  /// Weights nonnegative and summing to 1 within 1e-12; covariances symmetric PSD.
  /// Throws std::invalid_argument.
  void validate() const;

  Eigen::VectorXd mean() const;
  Eigen::MatrixXd covariance() const;
  /// E|X|^2.
  double second_moment() const;

  static GaussianMixture single(Eigen::VectorXd mean, Eigen::MatrixXd covariance);
  static GaussianMixture standard_normal(std::size_t dim);
  /// 0.2 N(2, 1) + 0.4 N(-4, 1) + 0.4 N(4, 2.25).
  static GaussianMixture paper_1d();
  /// Three planar components with means (4,2), (-2,-4), (-2,3).
  static GaussianMixture paper_2d();
};

/// Symmetric square root factor L with L L^T = S. Throws on non-PSD input.
Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& s);

}  // namespace granular
