#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "trajkit/schedule.hpp"

namespace trajkit {

/// eps(x, t, cond): noise prediction with the same dimension as x.
class EpsOracle {
 public:
  virtual ~EpsOracle() = default;

  virtual std::size_t dim() const = 0;
  virtual std::size_t cond_dim() const { return 0; }
  virtual void eps(std::span<const double> x, double t, std::span<const double> cond,
                   std::span<double> out) const = 0;

  std::vector<double> eps(std::span<const double> x, double t,
                          std::span<const double> cond = {}) const;

 protected:
  void check_dims(std::span<const double> x, std::span<const double> cond,
                  std::span<double> out) const;
};

/// Exact eps for data ~ N(mean, diag(scale^2)).
class GaussianOracle final : public EpsOracle {
 public:
  GaussianOracle(NoiseSchedule sched, std::vector<double> mean, std::vector<double> scale);
  GaussianOracle(NoiseSchedule sched, std::vector<double> mean, double scale);

  std::size_t dim() const override { return mean_.size(); }
  using EpsOracle::eps;
  void eps(std::span<const double> x, double t, std::span<const double> cond,
           std::span<double> out) const override;

  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& scale() const { return scale_; }
  /// Marginal mean and per-axis variance at time t.
  void marginal(double t, std::span<double> mean, std::span<double> var) const;

 private:
  NoiseSchedule sched_;
  std::vector<double> mean_;
  std::vector<double> scale_;
};

/// Exact eps for an isotropic Gaussian mixture, log-sum-exp stabilized.
class MixtureOracle final : public EpsOracle {
 public:
  MixtureOracle(NoiseSchedule sched, std::vector<double> weights,
                std::vector<std::vector<double>> means, std::vector<double> scales);

  std::size_t dim() const override { return means_.front().size(); }
  using EpsOracle::eps;
  void eps(std::span<const double> x, double t, std::span<const double> cond,
           std::span<double> out) const override;
  double log_density(std::span<const double> x, double t) const;

 private:
  NoiseSchedule sched_;
  std::vector<double> weights_;
  std::vector<std::vector<double>> means_;
  std::vector<double> scales_;
};

/// Conditional oracle for X ~ N(mu, s^2 I), Y = a X + b + n Z with diagonal a.
/// eps is exact for the posterior X | Y.
class LinearGaussianPosteriorOracle final : public EpsOracle {
 public:
  LinearGaussianPosteriorOracle(NoiseSchedule sched, std::vector<double> mu, double prior_std,
                                std::vector<double> a, std::vector<double> b, double noise_std);

  std::size_t dim() const override { return mu_.size(); }
  std::size_t cond_dim() const override { return mu_.size(); }
  using EpsOracle::eps;
  void eps(std::span<const double> x, double t, std::span<const double> cond,
           std::span<double> out) const override;

  std::vector<double> posterior_mean(std::span<const double> y) const;
  std::vector<double> posterior_var() const;

 private:
  NoiseSchedule sched_;
  std::vector<double> mu_;
  double prior_std_;
  std::vector<double> a_;
  std::vector<double> b_;
  double noise_std_;
};

/// Rectified-flow velocity dX_t/dt = E[X_T - X_0 | X_t] for X_0 ~ N(mean, s^2 I),
/// X_T ~ N(0, I), X_t = (1 - t) X_0 + t X_T.
void rf_gaussian_velocity(std::span<const double> mean, double scale, std::span<const double> x,
                          double t, std::span<double> out);

}  // namespace trajkit
