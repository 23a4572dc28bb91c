#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "trajkit/integrator.hpp"
#include "trajkit/micronet.hpp"
#include "trajkit/schedule.hpp"
#include "trajkit/task.hpp"

namespace trajkit {

// Guidance. The clean endpoint "0" of the inversion is the sampler endpoint t_min.

struct GuidanceTerms {
  double q;    // alpha_0 / alpha_t
  double den;  // q sigma_t - sigma_0
};

inline constexpr double kGuidanceCutoff = 1e-6;
inline constexpr double kGuidanceSingular = 1e-9;

GuidanceTerms guidance_terms(const NoiseSchedule& sched, double t);
/// False where |den| < kGuidanceCutoff; samplers then use eps_theta alone.
bool guidance_active(const NoiseSchedule& sched, double t);

/// ((alpha_0/alpha_t) x - y) / den. Numeric error when |den| < kGuidanceSingular.
void eps_tilde(const NoiseSchedule& sched, std::span<const double> x, double t,
               std::span<const double> y, std::span<double> out);

/// (1 + w) eps_theta - w eps_tilde.
void guided_eps(std::span<const double> eps_theta, std::span<const double> eps_tilde, double w,
                std::span<double> out);

// Initial-state interpolation.

double snr(const NoiseSchedule& sched, double t);

/// alpha_{T-delta} y + sigma_{T-delta} z. Config error when the SNR at T - delta
/// is not below snr_threshold.
std::vector<double> interp_init(const NoiseSchedule& sched, std::span<const double> y, double delta,
                                std::span<const double> z, double snr_threshold = 1e-3);

/// Largest offset j * (T - t_min) / teacher_steps whose SNR stays below the threshold.
double default_delta(const NoiseSchedule& sched, std::size_t teacher_steps, double snr_threshold);

// Distillation.

struct DistillConfig {
  std::size_t k = 1;
  /// Negative selects default_delta().
  double delta = -1.0;
  double w = 0.1;
  bool interp = true;
  std::size_t teacher_steps = 40;
  double mix_ratio = 0.5;
  double snr_threshold = 1e-3;
  std::size_t iterations = 1500;
  std::size_t batch = 16;
  AdamConfig adam{1e-3, 0.9, 0.999, 1e-8};
  std::uint64_t seed = 0;
  std::size_t max_skips = 10;
};

double resolve_delta(const NoiseSchedule& sched, const DistillConfig& cfg);

/// Start time of the student grid: T - delta with interpolation, T without.
double student_start(const NoiseSchedule& sched, const DistillConfig& cfg);

struct DistillStepResult {
  double loss = 0.0;
  bool skipped = false;
};

/// One distillation update over a minibatch of dataset indices. X_T of the
/// teacher and the student start share the draw rng(seed, stream).gaussians(Start).
class Distiller {
 public:
  Distiller(MicroNet& student, const MicroNet& teacher, const NoiseSchedule& sched,
            DistillConfig cfg);

  DistillStepResult step(const ToyDataset& data, std::size_t iteration);
  /// Target for sample idx drawn at the given stream (teacher output or ground truth).
  std::vector<double> target(const ToyDataset& data, std::size_t idx, std::uint64_t stream,
                             bool& from_teacher) const;
  std::vector<double> start_state(std::span<const double> y, std::uint64_t stream) const;
  const std::vector<double>& grid() const { return times_; }

 private:
  MicroNet& student_;
  const MicroNet& teacher_;
  NoiseSchedule sched_;
  DistillConfig cfg_;
  Adam opt_;
  std::vector<double> times_;
  std::vector<double> teacher_times_;
  std::size_t consecutive_skips_ = 0;
};

std::vector<double> distill_train(MicroNet& student, const MicroNet& teacher,
                                  const NoiseSchedule& sched, const ToyDataset& data,
                                  const DistillConfig& cfg);

struct InferResult {
  std::vector<double> x0;
  Trajectory trajectory;
};

/// Few-step inference: interpolated (or pure-noise when interp is false) start, then
/// k guided DPM1 steps. `z` is the start noise.
InferResult infer(const MicroNet& net, const NoiseSchedule& sched, std::span<const double> y,
                  std::span<const double> z, const DistillConfig& cfg);

/// Mean over the dataset of the infer() endpoint MSE, z from RngStream(seed, i).gaussians(Start).
double infer_mse(const MicroNet& net, const NoiseSchedule& sched, const ToyDataset& data,
                 const DistillConfig& cfg, std::uint64_t seed);

// Distillation cost.

/// Noise implied by one recorded solver step: VP (r x_t - x_prev)/(r s_t - s_prev),
/// VE (x_t - x_prev)/(s_t - s_prev).
void eps_check(const NoiseSchedule& sched, std::span<const double> x_prev,
               std::span<const double> x_cur, double t_prev, double t_cur, std::span<double> out);

/// The VP formula in its unsimplified form [x_t/a_t - dX/da] (a_t - a_p)/(s_p - r s_t).
void eps_check_expanded(const NoiseSchedule& sched, std::span<const double> x_prev,
                        std::span<const double> x_cur, double t_prev, double t_cur,
                        std::span<double> out);

struct CostReport {
  std::size_t k = 0;
  std::vector<double> times;  // k + 1 sparse timestamps
  std::vector<double> per_step;
  double total = 0.0;

  std::size_t argmax_step() const;
  bool first_step_dominant() const { return !per_step.empty() && argmax_step() == 0; }
};

/// Sub-samples `dense` at k + 1 evenly spaced indices and accumulates
/// || eps_check - eps_theta(X_{t_i}, t_i) ||_2 per sparse step.
CostReport trajectory_cost(const NoiseSchedule& sched, const Trajectory& dense, std::size_t k,
                           const EpsFn& eps);
/// Same with explicit sparse timestamps, each of which must appear in `dense`.
CostReport trajectory_cost(const NoiseSchedule& sched, const Trajectory& dense,
                           std::span<const double> sparse_times, const EpsFn& eps);

/// Element-wise mean of reports sharing k and timestamps.
CostReport average_cost(std::span<const CostReport> reports);

void write_cost_report(std::ostream& os, const CostReport& report, bool header = true);

// Interpolation error ratio (one-jump construction).

/// ||eps_{T-delta -> 0} - eps|| / ||eps_{T -> 0} - eps|| where eps_{s -> 0} is the
/// noise that makes a single DPM1 step from s land exactly on x. The start at
/// T - delta is alpha y + sigma z, the start at T is alpha_T * 0 + sigma_T z.
double interp_error_ratio(const NoiseSchedule& sched, std::span<const double> x,
                          std::span<const double> y, std::span<const double> z, double delta);

}  // namespace trajkit
