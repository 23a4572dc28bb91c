#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace trajkit {

enum class ScheduleKind { VP, VE, RectFlow };

struct ScheduleParams {
  ScheduleKind kind = ScheduleKind::VP;
  double t_min = 1e-3;
  double t_max = 1.0;
  double lambda_max = 10.0;  // VP log-SNR at t_min
  double lambda_min = -10.0;  // VP log-SNR at t_max
  double sigma_min = 0.01;  // VE
  double sigma_max = 50.0;  // VE

  bool operator==(const ScheduleParams&) const = default;
};

struct Coefficients {
  double alpha;
  double sigma;
  double lambda;  // log(alpha / sigma)
};

/// f(X, t) = f_coeff * X and g(t)^2 of the forward SDE.
struct DriftDiffusion {
  double f_coeff;
  double g_sq;
};

enum class Spacing { UniformT, UniformLambda };

/// Descending timestamps, times.front() = start, times.back() = end.
struct TimeGrid {
  std::vector<double> times;
  Spacing spacing = Spacing::UniformT;

  std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
};

/// Continuous-time noise schedule. Immutable; safe to share across threads.
///
/// VP: log-SNR linear in t from lambda_max at t_min to lambda_min at t_max,
///     alpha^2 = sigmoid(2 lambda), sigma^2 = sigmoid(-2 lambda).
/// VE: alpha = 1, sigma = sigma_min (sigma_max / sigma_min)^t.
/// RectFlow: alpha = 1 - t, sigma = t on [0, 1].
///
/// eval accepts t in [0, t_max]; t_min is where samplers stop, but the
/// closed forms are valid down to 0 and some inversions need alpha_0.
class NoiseSchedule {
 public:
  explicit NoiseSchedule(const ScheduleParams& params);

  static NoiseSchedule vp() { return NoiseSchedule(ScheduleParams{}); }
  static NoiseSchedule ve();
  static NoiseSchedule rect_flow(double t_min = 1e-3);

  const ScheduleParams& params() const noexcept { return p_; }
  ScheduleKind kind() const noexcept { return p_.kind; }
  double t_min() const noexcept { return p_.t_min; }
  double t_max() const noexcept { return p_.t_max; }

  Coefficients eval(double t) const;
  DriftDiffusion drift_diffusion(double t) const;

  double lambda(double t) const;
  /// Inverse of lambda(t); VP and VE only.
  double time_at_lambda(double lambda) const;

  /// k steps from `start` (default t_max) down to t_min.
  TimeGrid make_grid(std::size_t k, Spacing spacing, std::optional<double> start = {}) const;
  TimeGrid make_grid(std::size_t k) const { return make_grid(k, default_spacing()); }
  Spacing default_spacing() const noexcept {
    return p_.kind == ScheduleKind::RectFlow ? Spacing::UniformT : Spacing::UniformLambda;
  }

 private:
  double checked_time(double t) const;

  ScheduleParams p_;
};

const char* to_string(ScheduleKind kind) noexcept;
ScheduleKind parse_schedule_kind(const std::string& s);
const char* to_string(Spacing spacing) noexcept;
Spacing parse_spacing(const std::string& s);

}  // namespace trajkit
