#include "trajkit/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "trajkit/error.hpp"

namespace trajkit {

std::vector<double> EpsOracle::eps(std::span<const double> x, double t,
                                   std::span<const double> cond) const {
  std::vector<double> out(x.size());
  eps(x, t, cond, out);
  return out;
}

void EpsOracle::check_dims(std::span<const double> x, std::span<const double> cond,
                           std::span<double> out) const {
  if (x.size() != dim() || out.size() != dim()) {
    fail(ErrorKind::Argument, "oracle: state dimension " + std::to_string(x.size()) +
                                  " does not match oracle dimension " + std::to_string(dim()));
  }
  if (cond.size() != cond_dim()) {
    fail(ErrorKind::Argument, "oracle: condition dimension " + std::to_string(cond.size()) +
                                  ", expected " + std::to_string(cond_dim()));
  }
}

GaussianOracle::GaussianOracle(NoiseSchedule sched, std::vector<double> mean,
                               std::vector<double> scale)
    : sched_(std::move(sched)), mean_(std::move(mean)), scale_(std::move(scale)) {
  if (mean_.empty() || scale_.size() != mean_.size()) {
    fail(ErrorKind::Argument, "GaussianOracle: mean/scale size mismatch");
  }
  for (double s : scale_) {
    if (!(s > 0.0)) fail(ErrorKind::Argument, "GaussianOracle: scales must be positive");
  }
}

GaussianOracle::GaussianOracle(NoiseSchedule sched, std::vector<double> mean, double scale)
    : GaussianOracle(sched, mean, std::vector<double>(mean.size(), scale)) {}

void GaussianOracle::eps(std::span<const double> x, double t, std::span<const double> cond,
                         std::span<double> out) const {
  check_dims(x, cond, out);
  const Coefficients c = sched_.eval(t);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double v = c.alpha * c.alpha * scale_[i] * scale_[i] + c.sigma * c.sigma;
    out[i] = c.sigma * (x[i] - c.alpha * mean_[i]) / v;
  }
}

void GaussianOracle::marginal(double t, std::span<double> mean, std::span<double> var) const {
  const Coefficients c = sched_.eval(t);
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    mean[i] = c.alpha * mean_[i];
    var[i] = c.alpha * c.alpha * scale_[i] * scale_[i] + c.sigma * c.sigma;
  }
}

MixtureOracle::MixtureOracle(NoiseSchedule sched, std::vector<double> weights,
                             std::vector<std::vector<double>> means, std::vector<double> scales)
    : sched_(std::move(sched)),
      weights_(std::move(weights)),
      means_(std::move(means)),
      scales_(std::move(scales)) {
  if (weights_.empty() || means_.size() != weights_.size() || scales_.size() != weights_.size()) {
    fail(ErrorKind::Argument, "MixtureOracle: component counts disagree");
  }
  double total = 0.0;
  for (double w : weights_) {
    if (!(w >= 0.0)) fail(ErrorKind::Argument, "MixtureOracle: negative weight");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-12) fail(ErrorKind::Argument, "MixtureOracle: weights must sum to 1");
  for (std::size_t k = 0; k < means_.size(); ++k) {
    if (means_[k].size() != means_[0].size() || means_[k].empty()) {
      fail(ErrorKind::Argument, "MixtureOracle: component means differ in dimension");
    }
    if (!(scales_[k] > 0.0)) fail(ErrorKind::Argument, "MixtureOracle: scales must be positive");
  }
}

void MixtureOracle::eps(std::span<const double> x, double t, std::span<const double> cond,
                        std::span<double> out) const {
  check_dims(x, cond, out);
  const Coefficients c = sched_.eval(t);
  const std::size_t K = weights_.size();
  const std::size_t d = x.size();
  std::vector<double> logr(K);
  std::vector<double> var(K);
  double mx = -INFINITY;
  for (std::size_t k = 0; k < K; ++k) {
    var[k] = c.alpha * c.alpha * scales_[k] * scales_[k] + c.sigma * c.sigma;
    double q = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      const double r = x[i] - c.alpha * means_[k][i];
      q += r * r;
    }
    logr[k] = std::log(weights_[k]) - 0.5 * static_cast<double>(d) * std::log(var[k]) - 0.5 * q / var[k];
    mx = std::max(mx, logr[k]);
  }
  double z = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    logr[k] = std::exp(logr[k] - mx);
    z += logr[k];
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t k = 0; k < K; ++k) {
    const double w = logr[k] / z / var[k];
    for (std::size_t i = 0; i < d; ++i) out[i] += w * (x[i] - c.alpha * means_[k][i]);
  }
  for (std::size_t i = 0; i < d; ++i) out[i] *= c.sigma;
}

double MixtureOracle::log_density(std::span<const double> x, double t) const {
  const Coefficients c = sched_.eval(t);
  const auto d = static_cast<double>(x.size());
  std::vector<double> terms(weights_.size());
  double mx = -INFINITY;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    const double var = c.alpha * c.alpha * scales_[k] * scales_[k] + c.sigma * c.sigma;
    double q = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = x[i] - c.alpha * means_[k][i];
      q += r * r;
    }
    terms[k] = std::log(weights_[k]) - 0.5 * d * std::log(2.0 * std::numbers::pi * var) - 0.5 * q / var;
    mx = std::max(mx, terms[k]);
  }
  double s = 0.0;
  for (double v : terms) s += std::exp(v - mx);
  return mx + std::log(s);
}

LinearGaussianPosteriorOracle::LinearGaussianPosteriorOracle(NoiseSchedule sched,
                                                             std::vector<double> mu,
                                                             double prior_std,
                                                             std::vector<double> a,
                                                             std::vector<double> b,
                                                             double noise_std)
    : sched_(std::move(sched)),
      mu_(std::move(mu)),
      prior_std_(prior_std),
      a_(std::move(a)),
      b_(std::move(b)),
      noise_std_(noise_std) {
  if (mu_.empty() || a_.size() != mu_.size() || b_.size() != mu_.size()) {
    fail(ErrorKind::Argument, "LinearGaussianPosteriorOracle: dimension mismatch");
  }
  if (!(prior_std_ > 0.0) || !(noise_std_ > 0.0)) {
    fail(ErrorKind::Argument, "LinearGaussianPosteriorOracle: std devs must be positive");
  }
}

std::vector<double> LinearGaussianPosteriorOracle::posterior_var() const {
  std::vector<double> v(mu_.size());
  const double p0 = 1.0 / (prior_std_ * prior_std_);
  const double pn = 1.0 / (noise_std_ * noise_std_);
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 1.0 / (p0 + a_[i] * a_[i] * pn);
  return v;
}

std::vector<double> LinearGaussianPosteriorOracle::posterior_mean(std::span<const double> y) const {
  if (y.size() != mu_.size()) fail(ErrorKind::Argument, "posterior_mean: dimension mismatch");
  const auto v = posterior_var();
  std::vector<double> m(mu_.size());
  const double p0 = 1.0 / (prior_std_ * prior_std_);
  const double pn = 1.0 / (noise_std_ * noise_std_);
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = v[i] * (p0 * mu_[i] + a_[i] * pn * (y[i] - b_[i]));
  }
  return m;
}

void LinearGaussianPosteriorOracle::eps(std::span<const double> x, double t,
                                        std::span<const double> cond, std::span<double> out) const {
  check_dims(x, cond, out);
  const auto m = posterior_mean(cond);
  const auto v = posterior_var();
  const Coefficients c = sched_.eval(t);
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = c.sigma * (x[i] - c.alpha * m[i]) / (c.alpha * c.alpha * v[i] + c.sigma * c.sigma);
  }
}

void rf_gaussian_velocity(std::span<const double> mean, double scale, std::span<const double> x,
                          double t, std::span<double> out) {
  if (x.size() != mean.size() || out.size() != mean.size()) {
    fail(ErrorKind::Argument, "rf_gaussian_velocity: dimension mismatch");
  }
  if (t < 0.0 || t > 1.0) fail(ErrorKind::Domain, "rf_gaussian_velocity: t outside [0, 1]");
  // Jointly Gaussian (X_0, X_T, X_t): regress X_T - X_0 on X_t.
  const double s2 = scale * scale;
  const double v = (1.0 - t) * (1.0 - t) * s2 + t * t;
  const double cov = t - (1.0 - t) * s2;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = -mean[i] + cov / v * (x[i] - (1.0 - t) * mean[i]);
  }
}

}  // namespace trajkit
