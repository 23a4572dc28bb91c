#include "trajkit/integrator.hpp"

#include <cmath>
#include <cstdio>

#include "trajkit/error.hpp"

namespace trajkit {
namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void check_same(std::size_t n, std::span<const double> a, const char* what) {
  if (a.size() != n) fail(ErrorKind::Argument, std::string(what) + ": dimension mismatch");
}

void check_order(double t, double t_prev, const char* what) {
  if (!(t_prev < t)) {
    fail(ErrorKind::Argument, std::string(what) + ": need t_prev < t, got t=" + g17(t) +
                                  " t_prev=" + g17(t_prev));
  }
}

void check_gamma(double gamma, const char* what) {
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) {
    fail(ErrorKind::Argument, std::string(what) + ": gamma must be finite and >= 0, got " + g17(gamma));
  }
}

}  // namespace

const char* to_string(SolverKind kind) noexcept {
  switch (kind) {
    case SolverKind::DdpmAncestral: return "ddpm";
    case SolverKind::ReverseSdeEm: return "reverse_sde";
    case SolverKind::ReverseOdeEuler: return "reverse_ode";
    case SolverKind::Dpm1: return "dpm1";
    case SolverKind::MsdeVp: return "msde_vp";
    case SolverKind::MsdeVe: return "msde_ve";
    case SolverKind::RfOde: return "rf_ode";
    case SolverKind::RfSde: return "rf_sde";
  }
  return "?";
}

SolverKind parse_solver_kind(const std::string& s) {
  for (SolverKind k : {SolverKind::DdpmAncestral, SolverKind::ReverseSdeEm, SolverKind::ReverseOdeEuler,
                       SolverKind::Dpm1, SolverKind::MsdeVp, SolverKind::MsdeVe, SolverKind::RfOde,
                       SolverKind::RfSde}) {
    if (s == to_string(k)) return k;
  }
  fail(ErrorKind::Config, "unknown solver '" + s + "'");
}

bool solver_compatible(SolverKind solver, ScheduleKind sched) noexcept {
  switch (solver) {
    case SolverKind::DdpmAncestral:
    case SolverKind::MsdeVp:
      return sched == ScheduleKind::VP;
    case SolverKind::MsdeVe:
      return sched == ScheduleKind::VE;
    case SolverKind::ReverseSdeEm:
    case SolverKind::ReverseOdeEuler:
    case SolverKind::Dpm1:
      return sched != ScheduleKind::RectFlow;
    case SolverKind::RfOde:
    case SolverKind::RfSde:
      return sched == ScheduleKind::RectFlow;
  }
  return false;
}

bool solver_is_stochastic(SolverKind solver) noexcept {
  switch (solver) {
    case SolverKind::DdpmAncestral:
    case SolverKind::ReverseSdeEm:
    case SolverKind::MsdeVp:
    case SolverKind::MsdeVe:
    case SolverKind::RfSde:
      return true;
    default:
      return false;
  }
}

const char* to_string(NoiseCoefficient c) noexcept {
  switch (c) {
    case NoiseCoefficient::Sqrt2Log: return "sqrt2_log";
    case NoiseCoefficient::Log: return "log";
    case NoiseCoefficient::Exact: return "exact";
  }
  return "?";
}

NoiseCoefficient parse_noise_coefficient(const std::string& s) {
  if (s == "sqrt2_log") return NoiseCoefficient::Sqrt2Log;
  if (s == "log") return NoiseCoefficient::Log;
  if (s == "exact") return NoiseCoefficient::Exact;
  fail(ErrorKind::Config, "unknown noise coefficient '" + s + "'");
}

std::vector<double> forward_diffuse(const NoiseSchedule& sched, std::span<const double> x0, double t,
                                    std::span<const double> z) {
  check_same(x0.size(), z, "forward_diffuse");
  const Coefficients c = sched.eval(t);
  std::vector<double> out(x0.size());
  for (std::size_t i = 0; i < x0.size(); ++i) out[i] = c.alpha * x0[i] + c.sigma * z[i];
  return out;
}

void ddpm_step(const NoiseSchedule& sched, std::span<const double> x, double t, double t_prev,
               std::span<const double> eps, std::span<const double> z, std::span<double> out) {
  check_order(t, t_prev, "ddpm_step");
  check_same(x.size(), eps, "ddpm_step");
  check_same(x.size(), z, "ddpm_step");
  check_same(x.size(), out, "ddpm_step");
  if (sched.kind() != ScheduleKind::VP) fail(ErrorKind::Unsupported, "ddpm_step needs a VP schedule");
  const Coefficients ct = sched.eval(t);
  const Coefficients cp = sched.eval(t_prev);
  // One-step retention a = abar_{t+1} / abar_t with abar = alpha^2.
  const double a = (ct.alpha * ct.alpha) / (cp.alpha * cp.alpha);
  if (!(a > 0.0) || a > 1.0) {
    fail(ErrorKind::Domain, "ddpm_step: alpha ratio " + g17(a) + " outside (0, 1]");
  }
  const double k = (1.0 - a) / ct.sigma;
  const double sd = std::sqrt(cp.sigma * cp.sigma / (ct.sigma * ct.sigma) * (1.0 - a));
  const double inv = 1.0 / std::sqrt(a);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = inv * (x[i] - k * eps[i]) + sd * z[i];
}

void dpm1_step(const NoiseSchedule& sched, std::span<const double> x, double t, double t_prev,
               std::span<const double> eps, std::span<double> out) {
  check_order(t, t_prev, "dpm1_step");
  check_same(x.size(), eps, "dpm1_step");
  check_same(x.size(), out, "dpm1_step");
  const Coefficients ct = sched.eval(t);
  const Coefficients cp = sched.eval(t_prev);
  const double r = cp.alpha / ct.alpha;
  const double k = r * ct.sigma - cp.sigma;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = r * x[i] - k * eps[i];
}

double msde_noise_std(const NoiseSchedule& sched, double t, double t_prev, NoiseCoefficient coef) {
  const Coefficients ct = sched.eval(t);
  const Coefficients cp = sched.eval(t_prev);
  if (sched.kind() == ScheduleKind::VE) {
    const double base = std::sqrt(std::max(0.0, ct.sigma * ct.sigma - cp.sigma * cp.sigma));
    return coef == NoiseCoefficient::Sqrt2Log ? std::sqrt(2.0) * base : base;
  }
  switch (coef) {
    case NoiseCoefficient::Sqrt2Log:
      return std::sqrt(2.0) * cp.alpha * std::sqrt(std::log(cp.alpha / ct.alpha));
    case NoiseCoefficient::Log:
      return cp.alpha * std::sqrt(std::log(cp.alpha / ct.alpha));
    case NoiseCoefficient::Exact: {
      const double s = cp.alpha * ct.sigma / ct.alpha;
      return std::sqrt(std::max(0.0, s * s - cp.sigma * cp.sigma));
    }
  }
  return 0.0;
}

void msde_vp_step(const NoiseSchedule& sched, std::span<const double> x, double t, double t_prev,
                  std::span<const double> eps, double gamma, std::span<const double> z,
                  std::span<double> out, NoiseCoefficient coef) {
  check_gamma(gamma, "msde_vp_step");
  check_order(t, t_prev, "msde_vp_step");
  check_same(x.size(), eps, "msde_vp_step");
  check_same(x.size(), out, "msde_vp_step");
  if (sched.kind() != ScheduleKind::VP) fail(ErrorKind::Unsupported, "msde_vp_step needs a VP schedule");
  const Coefficients ct = sched.eval(t);
  const Coefficients cp = sched.eval(t_prev);
  const double r = cp.alpha / ct.alpha;
  const double k = (1.0 + gamma * gamma) * (r * ct.sigma - cp.sigma);
  if (gamma == 0.0) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = r * x[i] - k * eps[i];
    return;
  }
  check_same(x.size(), z, "msde_vp_step");
  const double c = gamma * msde_noise_std(sched, t, t_prev, coef);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = r * x[i] - k * eps[i] - c * z[i];
}

void msde_ve_step(const NoiseSchedule& sched, std::span<const double> x, double t, double t_prev,
                  std::span<const double> eps, double gamma, std::span<const double> z,
                  std::span<double> out, NoiseCoefficient coef) {
  check_gamma(gamma, "msde_ve_step");
  check_order(t, t_prev, "msde_ve_step");
  check_same(x.size(), eps, "msde_ve_step");
  check_same(x.size(), out, "msde_ve_step");
  if (sched.kind() != ScheduleKind::VE) fail(ErrorKind::Unsupported, "msde_ve_step needs a VE schedule");
  const Coefficients ct = sched.eval(t);
  const Coefficients cp = sched.eval(t_prev);
  const double k = (1.0 + gamma * gamma) * (ct.sigma - cp.sigma);
  if (gamma == 0.0) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - k * eps[i];
    return;
  }
  check_same(x.size(), z, "msde_ve_step");
  const double c = gamma * msde_noise_std(sched, t, t_prev, coef);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - k * eps[i] - c * z[i];
}

DriftCoefficients msde_drift(const NoiseSchedule& sched, double t, double gamma) {
  const DriftDiffusion fg = sched.drift_diffusion(t);
  const double sigma = sched.eval(t).sigma;
  return {fg.f_coeff, 0.5 * (1.0 + gamma * gamma) * fg.g_sq / sigma};
}

DriftCoefficients reverse_sde_drift(const NoiseSchedule& sched, double t) {
  const DriftDiffusion fg = sched.drift_diffusion(t);
  return {fg.f_coeff, fg.g_sq / sched.eval(t).sigma};
}

void reverse_sde_em_step(const NoiseSchedule& sched, std::span<const double> x, double t,
                         double t_prev, std::span<const double> eps, std::span<const double> z,
                         std::span<double> out) {
  check_order(t, t_prev, "reverse_sde_em_step");
  check_same(x.size(), eps, "reverse_sde_em_step");
  check_same(x.size(), z, "reverse_sde_em_step");
  check_same(x.size(), out, "reverse_sde_em_step");
  const double h = t - t_prev;
  const DriftCoefficients d = reverse_sde_drift(sched, t);
  const double g = std::sqrt(sched.drift_diffusion(t).g_sq * h);
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] - h * (d.x_coeff * x[i] + d.eps_coeff * eps[i]) + g * z[i];
  }
}

void reverse_ode_euler_step(const NoiseSchedule& sched, std::span<const double> x, double t,
                            double t_prev, std::span<const double> eps, std::span<double> out) {
  check_order(t, t_prev, "reverse_ode_euler_step");
  check_same(x.size(), eps, "reverse_ode_euler_step");
  check_same(x.size(), out, "reverse_ode_euler_step");
  const double h = t - t_prev;
  const DriftCoefficients d = msde_drift(sched, t, 0.0);
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i] = x[i] - h * (d.x_coeff * x[i] + d.eps_coeff * eps[i]);
  }
}

void rf_ode_step(std::span<const double> x, double t, double t_prev,
                 std::span<const double> velocity, std::span<double> out) {
  check_order(t, t_prev, "rf_ode_step");
  check_same(x.size(), velocity, "rf_ode_step");
  check_same(x.size(), out, "rf_ode_step");
  if (t_prev < 0.0 || t > 1.0) fail(ErrorKind::Domain, "rf_ode_step: times must lie in [0, 1]");
  const double h = t - t_prev;
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] - h * velocity[i];
}

double rf_sde_beta(double t, double dt, double alpha_mod) {
  if (!(alpha_mod >= 1.0)) fail(ErrorKind::Argument, "rf_sde: alpha_mod must be >= 1, got " + g17(alpha_mod));
  if (!(dt > 0.0) || t - dt < 0.0 || t > 1.0) {
    fail(ErrorKind::Domain, "rf_sde: need 0 <= t - dt < t <= 1, got t=" + g17(t) + " dt=" + g17(dt));
  }
  // b^2 = A^2 - a^2 with A = p (1 - a) / (1 - p); A - a = (alpha - 1) dt / (1 - p) in closed form.
  const double a = t - alpha_mod * dt;
  const double p = t - dt;
  const double diff = (alpha_mod - 1.0) * dt / (1.0 - p);
  const double sum = p * (1.0 - a) / (1.0 - p) + a;
  const double b2 = diff * sum;
  if (b2 < 0.0) {
    fail(ErrorKind::Numeric, "rf_sde: beta^2 = " + g17(b2) + " < 0 at t=" + g17(t) + " dt=" + g17(dt) +
                                 " alpha_mod=" + g17(alpha_mod));
  }
  return std::sqrt(b2);
}

void rf_sde_step(std::span<const double> x, double t, double dt, std::span<const double> velocity,
                 double alpha_mod, std::span<const double> z, std::span<double> out) {
  check_same(x.size(), velocity, "rf_sde_step");
  check_same(x.size(), out, "rf_sde_step");
  const double beta = rf_sde_beta(t, dt, alpha_mod);
  const double a = t - alpha_mod * dt;
  const double den = (1.0 + alpha_mod * dt - t) + std::sqrt(a * a + beta * beta);
  if (beta != 0.0) check_same(x.size(), z, "rf_sde_step");
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double noise = beta != 0.0 ? beta * z[i] : 0.0;
    out[i] = (x[i] - alpha_mod * dt * velocity[i] - noise) / den;
  }
}

EpsFn oracle_fn(const EpsOracle& oracle, std::span<const double> cond) {
  return [&oracle, cond](std::span<const double> x, double t, std::size_t, std::span<double> out) {
    oracle.eps(x, t, cond, out);
  };
}

Trajectory integrate(const NoiseSchedule& sched, const EpsFn& eps_fn, std::span<const double> times,
                     std::span<const double> x_start, const IntegrateOptions& opt,
                     const RngStream& rng) {
  if (times.size() < 2) fail(ErrorKind::Argument, "integrate: grid needs at least one step");
  if (!solver_compatible(opt.solver, sched.kind())) {
    fail(ErrorKind::Unsupported, std::string("integrate: solver ") + to_string(opt.solver) +
                                     " is not defined for a " + to_string(sched.kind()) + " schedule");
  }
  const std::size_t steps = times.size() - 1;
  for (std::size_t i = 0; i < steps; ++i) {
    if (!(times[i + 1] < times[i])) fail(ErrorKind::Argument, "integrate: grid must be strictly descending");
  }
  const bool stochastic = solver_is_stochastic(opt.solver);
  if (!opt.gamma_fn && opt.gammas.size() != 1 && opt.gammas.size() != steps) {
    fail(ErrorKind::Argument, "integrate: gammas must have 1 or " + std::to_string(steps) + " entries");
  }
  const std::size_t d = x_start.size();
  Trajectory tr;
  tr.solver = opt.solver;
  tr.seed = rng.seed();
  tr.stream = rng.stream();
  tr.times.assign(times.begin(), times.end());
  tr.states.reserve(times.size());
  tr.states.emplace_back(x_start.begin(), x_start.end());
  std::vector<double> e(d), z(d), next(d);
  for (std::size_t i = 0; i < steps; ++i) {
    const std::vector<double>& x = tr.states.back();
    const double t = times[i];
    const double tp = times[i + 1];
    eps_fn(x, t, i, e);
    if (stochastic) rng.gaussians(static_cast<std::uint32_t>(i), z, Draw::Step);
    double gamma = 0.0;
    if (opt.solver == SolverKind::MsdeVp || opt.solver == SolverKind::MsdeVe) {
      gamma = opt.gamma_fn ? opt.gamma_fn(i, t, x, e) : opt.gammas[opt.gammas.size() == 1 ? 0 : i];
      tr.gammas.push_back(gamma);
    }
    switch (opt.solver) {
      case SolverKind::DdpmAncestral: ddpm_step(sched, x, t, tp, e, z, next); break;
      case SolverKind::ReverseSdeEm: reverse_sde_em_step(sched, x, t, tp, e, z, next); break;
      case SolverKind::ReverseOdeEuler: reverse_ode_euler_step(sched, x, t, tp, e, next); break;
      case SolverKind::Dpm1: dpm1_step(sched, x, t, tp, e, next); break;
      case SolverKind::MsdeVp: msde_vp_step(sched, x, t, tp, e, gamma, z, next, opt.noise); break;
      case SolverKind::MsdeVe: msde_ve_step(sched, x, t, tp, e, gamma, z, next, opt.noise); break;
      case SolverKind::RfOde: rf_ode_step(x, t, tp, e, next); break;
      case SolverKind::RfSde: rf_sde_step(x, t, t - tp, e, opt.alpha_mod, z, next); break;
    }
    for (double v : next) {
      if (!std::isfinite(v)) {
        fail(ErrorKind::Numeric, "integrate: state diverged at step " + std::to_string(i) + " (t=" + g17(t) + ")");
      }
    }
    tr.states.push_back(next);
  }
  return tr;
}

}  // namespace trajkit
