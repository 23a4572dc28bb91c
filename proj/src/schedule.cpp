#include "trajkit/schedule.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "trajkit/error.hpp"

namespace trajkit {
namespace {

double sigmoid(double z) {
  if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

}  // namespace

NoiseSchedule::NoiseSchedule(const ScheduleParams& params) : p_(params) {
  if (!(p_.t_min > 0.0) || !(p_.t_max > p_.t_min) || !std::isfinite(p_.t_max)) {
    fail(ErrorKind::Argument, "schedule: need 0 < t_min < t_max, got t_min=" + fmt(p_.t_min) +
                                  " t_max=" + fmt(p_.t_max));
  }
  switch (p_.kind) {
    case ScheduleKind::VP:
      if (!(p_.lambda_max > p_.lambda_min) || !std::isfinite(p_.lambda_max) ||
          !std::isfinite(p_.lambda_min)) {
        fail(ErrorKind::Argument, "schedule: VP needs lambda_max > lambda_min");
      }
      break;
    case ScheduleKind::VE:
      if (!(p_.sigma_min > 0.0) || !(p_.sigma_max > p_.sigma_min) || !std::isfinite(p_.sigma_max)) {
        fail(ErrorKind::Argument, "schedule: VE needs 0 < sigma_min < sigma_max");
      }
      break;
    case ScheduleKind::RectFlow:
      if (p_.t_max > 1.0) fail(ErrorKind::Argument, "schedule: RectFlow needs t_max <= 1");
      break;
  }
}

NoiseSchedule NoiseSchedule::ve() {
  ScheduleParams p;
  p.kind = ScheduleKind::VE;
  return NoiseSchedule(p);
}

NoiseSchedule NoiseSchedule::rect_flow(double t_min) {
  ScheduleParams p;
  p.kind = ScheduleKind::RectFlow;
  p.t_min = t_min;
  return NoiseSchedule(p);
}

double NoiseSchedule::checked_time(double t) const {
  const double slack = 1e-12 * p_.t_max;
  if (!std::isfinite(t) || t < -slack || t > p_.t_max + slack) {
    fail(ErrorKind::Domain, "schedule: t=" + fmt(t) + " outside [0, " + fmt(p_.t_max) + "]");
  }
  return std::clamp(t, 0.0, p_.t_max);
}

double NoiseSchedule::lambda(double t) const {
  t = checked_time(t);
  switch (p_.kind) {
    case ScheduleKind::VP:
      return p_.lambda_max + (p_.lambda_min - p_.lambda_max) * (t - p_.t_min) / (p_.t_max - p_.t_min);
    case ScheduleKind::VE:
      return -(std::log(p_.sigma_min) + t * std::log(p_.sigma_max / p_.sigma_min));
    case ScheduleKind::RectFlow:
      if (t == 0.0) return std::numeric_limits<double>::infinity();
      return std::log((1.0 - t) / t);
  }
  return 0.0;
}

double NoiseSchedule::time_at_lambda(double lam) const {
  switch (p_.kind) {
    case ScheduleKind::VP:
      return p_.t_min + (lam - p_.lambda_max) * (p_.t_max - p_.t_min) / (p_.lambda_min - p_.lambda_max);
    case ScheduleKind::VE:
      return (-lam - std::log(p_.sigma_min)) / std::log(p_.sigma_max / p_.sigma_min);
    case ScheduleKind::RectFlow:
      break;
  }
  fail(ErrorKind::Unsupported, "schedule: log-SNR inversion is defined for VP and VE only");
}

Coefficients NoiseSchedule::eval(double t) const {
  t = checked_time(t);
  switch (p_.kind) {
    case ScheduleKind::VP: {
      const double lam = lambda(t);
      return {std::sqrt(sigmoid(2.0 * lam)), std::sqrt(sigmoid(-2.0 * lam)), lam};
    }
    case ScheduleKind::VE: {
      const double sigma = p_.sigma_min * std::pow(p_.sigma_max / p_.sigma_min, t);
      return {1.0, sigma, -std::log(sigma)};
    }
    case ScheduleKind::RectFlow:
      return {1.0 - t, t, lambda(t)};
  }
  return {};
}

DriftDiffusion NoiseSchedule::drift_diffusion(double t) const {
  const Coefficients c = eval(t);
  switch (p_.kind) {
    case ScheduleKind::VP: {
      // d log(alpha)/d lambda = sigma^2, so f = sigma^2 lambda'(t) and
      // g^2 = d sigma^2/dt - 2 f sigma^2 = -2 sigma^2 lambda'(t).
      const double dlam = (p_.lambda_min - p_.lambda_max) / (p_.t_max - p_.t_min);
      const double s2 = c.sigma * c.sigma;
      return {s2 * dlam, -2.0 * s2 * dlam};
    }
    case ScheduleKind::VE:
      return {0.0, 2.0 * c.sigma * c.sigma * std::log(p_.sigma_max / p_.sigma_min)};
    case ScheduleKind::RectFlow:
      break;
  }
  fail(ErrorKind::Unsupported, "schedule: drift/diffusion is not defined for RectFlow");
}

TimeGrid NoiseSchedule::make_grid(std::size_t k, Spacing spacing, std::optional<double> start) const {
  if (k == 0) fail(ErrorKind::Argument, "make_grid: step count must be >= 1");
  const double t0 = start.value_or(p_.t_max);
  if (!(t0 > p_.t_min) || t0 > p_.t_max) {
    fail(ErrorKind::Domain, "make_grid: start " + fmt(t0) + " must lie in (t_min, t_max]");
  }
  TimeGrid grid;
  grid.spacing = spacing;
  grid.times.resize(k + 1);
  const auto n = static_cast<double>(k);
  if (spacing == Spacing::UniformT) {
    for (std::size_t i = 0; i <= k; ++i) {
      grid.times[i] = t0 + (p_.t_min - t0) * (static_cast<double>(i) / n);
    }
  } else {
    if (p_.kind == ScheduleKind::RectFlow) {
      fail(ErrorKind::Unsupported, "make_grid: uniform-in-lambda spacing needs a VP or VE schedule");
    }
    const double l0 = lambda(t0);
    const double l1 = lambda(p_.t_min);
    for (std::size_t i = 0; i <= k; ++i) {
      grid.times[i] = time_at_lambda(l0 + (l1 - l0) * (static_cast<double>(i) / n));
    }
  }
  grid.times.front() = t0;
  grid.times.back() = p_.t_min;
  return grid;
}

const char* to_string(ScheduleKind kind) noexcept {
  switch (kind) {
    case ScheduleKind::VP: return "vp";
    case ScheduleKind::VE: return "ve";
    case ScheduleKind::RectFlow: return "rectflow";
  }
  return "?";
}

ScheduleKind parse_schedule_kind(const std::string& s) {
  if (s == "vp" || s == "VP") return ScheduleKind::VP;
  if (s == "ve" || s == "VE") return ScheduleKind::VE;
  if (s == "rectflow" || s == "RectFlow" || s == "rect_flow") return ScheduleKind::RectFlow;
  fail(ErrorKind::Config, "unknown schedule kind '" + s + "'");
}

const char* to_string(Spacing spacing) noexcept {
  return spacing == Spacing::UniformT ? "uniform_t" : "uniform_lambda";
}

Spacing parse_spacing(const std::string& s) {
  if (s == "uniform_t") return Spacing::UniformT;
  if (s == "uniform_lambda") return Spacing::UniformLambda;
  fail(ErrorKind::Config, "unknown grid spacing '" + s + "'");
}

}  // namespace trajkit
