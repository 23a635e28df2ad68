#include "granular/mixture.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include <fmt/core.h>

namespace granular {

Eigen::MatrixXd covariance_factor(const Eigen::MatrixXd& s) {
  if (s.rows() != s.cols()) throw std::invalid_argument("covariance is not square");
  if (!s.isApprox(s.transpose(), 1e-12) && (s - s.transpose()).norm() > 1e-12) {
    throw std::invalid_argument("covariance is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(s);
  const double scale = std::max(1.0, eig.eigenvalues().cwiseAbs().maxCoeff());
  if (eig.eigenvalues().minCoeff() < -1e-12 * scale) {
    throw std::invalid_argument("covariance is not positive semidefinite");
  }
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

void GaussianMixture::validate() const {
  if (weights.empty()) throw std::invalid_argument("mixture has no components");
  if (means.size() != weights.size() || covariances.size() != weights.size()) {
    throw std::invalid_argument("mixture weights, means and covariances differ in length");
  }
  const auto d = static_cast<Eigen::Index>(dim());
  if (d == 0) throw std::invalid_argument("mixture components have dimension 0");
  double total = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    if (!(weights[k] >= 0.0)) throw std::invalid_argument("mixture weights must be nonnegative");
    total += weights[k];
    if (means[k].size() != d || covariances[k].rows() != d || covariances[k].cols() != d) {
      throw std::invalid_argument(fmt::format("mixture component {} has inconsistent dimension", k));
    }
    covariance_factor(covariances[k]);
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw std::invalid_argument(fmt::format("mixture weights sum to {:.17g}, not 1", total));
  }
}

Eigen::VectorXd GaussianMixture::mean() const {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim()));
  for (std::size_t k = 0; k < size(); ++k) m += weights[k] * means[k];
  return m;
}

Eigen::MatrixXd GaussianMixture::covariance() const {
  const Eigen::VectorXd mu = mean();
  const auto d = static_cast<Eigen::Index>(dim());
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t k = 0; k < size(); ++k) {
    const Eigen::VectorXd dm = means[k] - mu;
    s += weights[k] * (covariances[k] + dm * dm.transpose());
  }
  return s;
}

double GaussianMixture::second_moment() const {
  double m2 = 0.0;
  for (std::size_t k = 0; k < size(); ++k) {
    m2 += weights[k] * (means[k].squaredNorm() + covariances[k].trace());
  }
  return m2;
}

GaussianMixture GaussianMixture::single(Eigen::VectorXd mean, Eigen::MatrixXd covariance) {
  GaussianMixture m;
  m.weights = {1.0};
  m.means = {std::move(mean)};
  m.covariances = {std::move(covariance)};
  return m;
}

GaussianMixture GaussianMixture::standard_normal(std::size_t dim) {
  const auto d = static_cast<Eigen::Index>(dim);
  return single(Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d));
}

GaussianMixture GaussianMixture::paper_1d() {
  // g_a has variance 2a: g_0.5 -> 1, g_1.125 -> 2.25.
  GaussianMixture m;
  m.weights = {0.2, 0.4, 0.4};
  m.means = {Eigen::VectorXd::Constant(1, 2.0), Eigen::VectorXd::Constant(1, -4.0),
             Eigen::VectorXd::Constant(1, 4.0)};
  m.covariances = {Eigen::MatrixXd::Constant(1, 1, 1.0), Eigen::MatrixXd::Constant(1, 1, 1.0),
                   Eigen::MatrixXd::Constant(1, 1, 2.25)};
  return m;
}

GaussianMixture GaussianMixture::paper_2d() {
  // g_{Sigma/2} has covariance exactly Sigma.
  GaussianMixture m;
  m.weights = {0.2, 0.4, 0.4};
  m.means = {Eigen::Vector2d(4.0, 2.0), Eigen::Vector2d(-2.0, -4.0), Eigen::Vector2d(-2.0, 3.0)};
  Eigen::Matrix2d s1, s2, s3;
  s1 << 1.0, 0.2, 0.2, 1.3;
  s2 << 1.0, -0.2, -0.2, 1.3;
  s3 << 2.0, 0.2, 0.2, 2.0;
  m.covariances = {s1, s2, s3};
  return m;
}

}  // namespace granular
