#include "granular/experiments.hpp"

#include <cmath>
#include <stdexcept>

#include <fmt/core.h>

namespace granular {
namespace {

struct QuadraticRates {
  double self;   // a in the drift -(a Y + b m_t)
  double mean;   // b
};

QuadraticRates rates_for(char model) {
  switch (model) {
    case 'B': return {0.75, 0.25};
    case 'F': return {2.0, -1.0};
    default:
      throw std::invalid_argument(
          fmt::format("model {} has no quadratic mean-field reference (B and F only)", model));
  }
}

}  // namespace

GaussianMixture ou_exact_marginal(const GaussianMixture& m0, double t) {
  if (!(t >= 0.0)) throw std::invalid_argument("ou_exact_marginal: t must be nonnegative");
  m0.validate();
  const double decay = std::exp(-t);
  const double fill = -std::expm1(-2.0 * t);
  const auto d = static_cast<Eigen::Index>(m0.dim());
  GaussianMixture out = m0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out.means[k] = decay * m0.means[k];
    out.covariances[k] = decay * decay * m0.covariances[k] + fill * Eigen::MatrixXd::Identity(d, d);
  }
  return out;
}

MeanVariance quadratic_meanfield_reference(char model, std::span<const double> mean0,
                                           std::span<const double> var0, double t) {
  const QuadraticRates r = rates_for(model);
  if (!(t >= 0.0)) throw std::invalid_argument("t must be nonnegative");
  if (mean0.size() != var0.size()) throw std::invalid_argument("mean and variance differ in length");
  // mean' = -(a + b) mean = -mean; var' = -2a var + 2.
  const double var_inf = 1.0 / r.self;
  const double mean_decay = std::exp(-(r.self + r.mean) * t);
  const double var_decay = std::exp(-2.0 * r.self * t);
  MeanVariance out;
  for (std::size_t c = 0; c < mean0.size(); ++c) {
    out.mean.push_back(mean0[c] * mean_decay);
    out.variance.push_back(var_inf + (var0[c] - var_inf) * var_decay);
  }
  return out;
}

MeanVariance quadratic_meanfield_reference(char model, const GaussianMixture& m0, double t) {
  m0.validate();
  const Eigen::VectorXd mean = m0.mean();
  const Eigen::VectorXd var = m0.covariance().diagonal();
  return quadratic_meanfield_reference(model, std::span<const double>(mean.data(), mean.size()),
                                       std::span<const double>(var.data(), var.size()), t);
}

GaussianMixture quadratic_meanfield_marginal(char model, const GaussianMixture& m0, double t) {
  const QuadraticRates r = rates_for(model);
  if (!(t >= 0.0)) throw std::invalid_argument("t must be nonnegative");
  m0.validate();
  // Y_t = e^{-a t} Y_0 - b int_0^t e^{-a (t - s)} m_s ds + Gaussian, with m_s = m_0 e^{-s}.
  const double a = r.self;
  const double b = r.mean;
  const double decay = std::exp(-a * t);
  const double drift_integral = (std::exp(-t) - decay) / (a - 1.0);
  const double noise_var = -std::expm1(-2.0 * a * t) / a;
  const Eigen::VectorXd m_init = m0.mean();
  const auto d = static_cast<Eigen::Index>(m0.dim());
  GaussianMixture out = m0;
  for (std::size_t k = 0; k < out.size(); ++k) {
    out.means[k] = decay * m0.means[k] - b * drift_integral * m_init;
    out.covariances[k] = decay * decay * m0.covariances[k] + noise_var * Eigen::MatrixXd::Identity(d, d);
  }
  return out;
}

std::optional<LogLogFit> fit_loglog(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit_loglog: x and y differ in length");
  if (x.empty()) throw std::invalid_argument("fit_loglog: no points");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) {
      throw std::invalid_argument("fit_loglog: values must be positive");
    }
  }
  if (x.size() == 1) return std::nullopt;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]);
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_loglog: all x values coincide; slope is undefined");
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  return fit;
}

MomentSeries moment_trace(const RunRecord& record, double a) {
  if (!(a >= 0.0)) throw std::invalid_argument("moment order must be nonnegative");
  if (record.snapshots.empty()) throw std::invalid_argument("run record has no snapshots");
  MomentSeries series;
  for (const auto& s : record.snapshots) {
    double value = 1.0;
    if (a != 0.0) {
      bool found = false;
      for (const auto& [order, m] : s.moments) {
        if (std::abs(order - a) <= 1e-12) {
          value = m;
          found = true;
          break;
        }
      }
      if (!found) {
        throw std::invalid_argument(fmt::format("run record has no moment of order {}", a));
      }
    }
    series.steps.push_back(s.step);
    series.values.push_back(value);
    series.supremum = series.values.size() == 1 ? value : std::max(series.supremum, value);
  }
  return series;
}

}  // namespace granular
