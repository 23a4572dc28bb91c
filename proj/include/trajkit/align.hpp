#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "trajkit/integrator.hpp"
#include "trajkit/micronet.hpp"
#include "trajkit/schedule.hpp"
#include "trajkit/task.hpp"

namespace trajkit {

/// gamma_psi(err, t) = softplus(net([log1p(err)], t)) > 0.
class GammaModulator {
 public:
  GammaModulator() = default;
  explicit GammaModulator(std::uint64_t seed, std::vector<std::size_t> hidden = {32, 32});
  explicit GammaModulator(MicroNet net);

  static MicroNetSpec default_spec(std::vector<std::size_t> hidden = {32, 32});

  double eval(double err, double t) const;
  double eval(double err, double t, GradientTape& tape) const;
  /// grad_psi += d gamma / d psi * upstream, for the tape of a previous eval.
  void backward(const GradientTape& tape, double upstream, std::span<double> grad_psi) const;

  MicroNet& net() { return net_; }
  const MicroNet& net() const { return net_; }

 private:
  MicroNet net_;
};

using RewardFn = std::function<double(std::span<const double> x_hat, std::span<const double> x_star)>;

struct AlignConfig {
  std::size_t n_candidates = 8;
  RewardSpec reward{};
  DivergenceSpec divergence{};
  /// Overrides `reward` when set.
  RewardFn custom_reward;
  AdamConfig adam{5e-5, 0.9, 0.999, 1e-8};
  AdamConfig mod_adam{1e-3, 0.9, 0.999, 1e-8};
  std::size_t iterations = 2000;
  std::size_t steps = 10;
  double anchor_weight = 1.0;
  /// Candidate n uses gamma = exp(gamma_explore * xi_n) * gamma_psi.
  double gamma_explore = 0.5;
  /// Upper clamp on candidate gamma.
  double gamma_max = 2.0;
  /// Forces a constant gamma on every candidate step when set.
  std::optional<double> gamma_override;
  NoiseCoefficient noise = NoiseCoefficient::Exact;
  std::uint64_t seed = 0;
  std::size_t max_skips = 10;
};

/// ||x_hat_0 - x_star|| with x_hat_0 the single DPM1 jump from (x, t) to t_min.
double one_jump_error(const NoiseSchedule& sched, std::span<const double> x, double t,
                      std::span<const double> eps, std::span<const double> x_star);

struct Candidate {
  Trajectory trajectory;
  std::vector<double> errors;  // modulator error input per step
  double multiplier = 1.0;
  double reward = 0.0;
};

/// N M-SDE trajectories over `times` (times[0] = tau) from x_tau. Candidate n
/// draws from RngStream(seed, stream_base + n); a diverged candidate is redrawn
/// once on a fresh stream.
std::vector<Candidate> sample_candidates(const EpsFn& eps, const NoiseSchedule& sched,
                                         const GammaModulator& mod, std::span<const double> x_tau,
                                         std::span<const double> times, std::span<const double> x_star,
                                         const AlignConfig& cfg, std::uint64_t stream_base);

/// argmax with ties to the lowest index. Run error when no reward is finite.
std::size_t select_best(std::span<const double> rewards);

struct AlignStepResult {
  double loss = 0.0;
  double reward_best = 0.0;
  double reward_mean = 0.0;
  double gamma_mean = 0.0;
  std::size_t tau_index = 0;
  bool skipped = false;
};

class Aligner {
 public:
  Aligner(MicroNet& theta, GammaModulator& psi, const NoiseSchedule& sched, AlignConfig cfg);

  AlignStepResult step(std::span<const double> x_star, std::span<const double> y, std::size_t iteration);
  /// As step(), with explicit X_T and tau index.
  AlignStepResult step(std::span<const double> x_star, std::span<const double> y,
                       std::span<const double> x_T, std::size_t tau_index, std::size_t iteration);

  const std::vector<double>& grid() const { return times_; }

 private:
  double reward_of(std::span<const double> x_hat, std::span<const double> x_star) const;

  MicroNet& theta_;
  GammaModulator& psi_;
  NoiseSchedule sched_;
  AlignConfig cfg_;
  Adam opt_theta_;
  Adam opt_psi_;
  std::vector<double> times_;
  std::size_t consecutive_skips_ = 0;
};

struct AlignMetrics {
  std::size_t iteration;
  double loss;
  double reward_best;
  double reward_mean;
  double gamma_mean;
};

std::vector<AlignMetrics> align_train(MicroNet& theta, GammaModulator& psi, const NoiseSchedule& sched,
                                      const ToyDataset& data, const AlignConfig& cfg);

void write_metrics(std::ostream& os, std::span<const AlignMetrics> rows);

/// Mean over the dataset of the k-step DPM1 endpoint MSE, X_T drawn from
/// RngStream(seed, i).gaussians(Start).
double ode_endpoint_mse(const MicroNet& net, const NoiseSchedule& sched, const ToyDataset& data,
                        std::size_t k, std::uint64_t seed);

}  // namespace trajkit
