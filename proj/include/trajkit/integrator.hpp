#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "trajkit/oracle.hpp"
#include "trajkit/rng.hpp"
#include "trajkit/schedule.hpp"

namespace trajkit {

enum class SolverKind {
  DdpmAncestral,
  ReverseSdeEm,
  ReverseOdeEuler,
  Dpm1,
  MsdeVp,
  MsdeVe,
  RfOde,
  RfSde,
};

const char* to_string(SolverKind kind) noexcept;
SolverKind parse_solver_kind(const std::string& s);
bool solver_compatible(SolverKind solver, ScheduleKind sched) noexcept;
bool solver_is_stochastic(SolverKind solver) noexcept;

/// Standard deviation of the M-SDE noise term per unit gamma.
///   Sqrt2Log: sqrt(2) alpha_p sqrt(log(alpha_p / alpha_t))   (VE: sqrt(2) sqrt(s_t^2 - s_p^2))
///   Log:      alpha_p sqrt(log(alpha_p / alpha_t))           (VE: sqrt(s_t^2 - s_p^2))
///   Exact:    sqrt((alpha_p s_t / alpha_t)^2 - s_p^2)        (VE: sqrt(s_t^2 - s_p^2))
/// Exact is the variance of the forward transition between the two marginals
/// and is the default.
enum class NoiseCoefficient { Sqrt2Log, Log, Exact };

const char* to_string(NoiseCoefficient c) noexcept;
NoiseCoefficient parse_noise_coefficient(const std::string& s);

struct Trajectory {
  std::vector<std::vector<double>> states;
  std::vector<double> times;
  std::vector<double> gammas;  // per step; empty for deterministic solvers
  SolverKind solver = SolverKind::Dpm1;
  std::uint64_t seed = 0;
  std::uint64_t stream = 0;

  std::size_t steps() const { return times.empty() ? 0 : times.size() - 1; }
  const std::vector<double>& endpoint() const { return states.back(); }
};

// Single steps. `z` holds standard normal draws of the state dimension.
// Every step writes to `out`, which may alias `x`.

std::vector<double> forward_diffuse(const NoiseSchedule& sched, std::span<const double> x0, double t,
                                    std::span<const double> z);

void ddpm_step(const NoiseSchedule& sched, std::span<const double> x, double t, double t_prev,
               std::span<const double> eps, std::span<const double> z, std::span<double> out);

void dpm1_step(const NoiseSchedule& sched, std::span<const double> x, double t, double t_prev,
               std::span<const double> eps, std::span<double> out);

double msde_noise_std(const NoiseSchedule& sched, double t, double t_prev, NoiseCoefficient coef);

void msde_vp_step(const NoiseSchedule& sched, std::span<const double> x, double t, double t_prev,
                  std::span<const double> eps, double gamma, std::span<const double> z,
                  std::span<double> out, NoiseCoefficient coef = NoiseCoefficient::Exact);

void msde_ve_step(const NoiseSchedule& sched, std::span<const double> x, double t, double t_prev,
                  std::span<const double> eps, double gamma, std::span<const double> z,
                  std::span<double> out, NoiseCoefficient coef = NoiseCoefficient::Exact);

void reverse_sde_em_step(const NoiseSchedule& sched, std::span<const double> x, double t,
                         double t_prev, std::span<const double> eps, std::span<const double> z,
                         std::span<double> out);

void reverse_ode_euler_step(const NoiseSchedule& sched, std::span<const double> x, double t,
                            double t_prev, std::span<const double> eps, std::span<double> out);

/// Drift of dX = [a X + b eps] dt as the pair (a, b).
struct DriftCoefficients {
  double x_coeff;
  double eps_coeff;
};
/// M-SDE drift f X - (1 + gamma^2)/2 g^2 grad log p with grad log p = -eps / sigma.
DriftCoefficients msde_drift(const NoiseSchedule& sched, double t, double gamma);
/// Reverse-SDE drift f X - g^2 grad log p.
DriftCoefficients reverse_sde_drift(const NoiseSchedule& sched, double t);

/// velocity = dX_t/dt along X_t = (1 - t) X_0 + t X_T, i.e. X_T - X_0.
void rf_ode_step(std::span<const double> x, double t, double t_prev,
                 std::span<const double> velocity, std::span<double> out);

/// beta_k of the stochastic rectified-flow step; Numeric error when beta^2 < 0.
double rf_sde_beta(double t, double dt, double alpha_mod);

void rf_sde_step(std::span<const double> x, double t, double dt, std::span<const double> velocity,
                 double alpha_mod, std::span<const double> z, std::span<double> out);

/// Returns eps (or velocity for RF solvers) at (x, t); `step` is the grid index.
using EpsFn = std::function<void(std::span<const double> x, double t, std::size_t step,
                                 std::span<double> out)>;
/// Per-step gamma chosen from the current state and its eps prediction.
using GammaFn = std::function<double(std::size_t step, double t, std::span<const double> x,
                                     std::span<const double> eps)>;

EpsFn oracle_fn(const EpsOracle& oracle, std::span<const double> cond = {});

struct IntegrateOptions {
  SolverKind solver = SolverKind::Dpm1;
  NoiseCoefficient noise = NoiseCoefficient::Exact;
  /// One entry per step, or a single entry broadcast to all steps.
  std::vector<double> gammas{0.0};
  /// Overrides `gammas` when set.
  GammaFn gamma_fn;
  double alpha_mod = 1.0;
};

/// Runs the solver over every interval of `grid`, recording all states.
/// Step i draws its noise from rng.gaussians(i, ..., Draw::Step).
Trajectory integrate(const NoiseSchedule& sched, const EpsFn& eps, std::span<const double> times,
                     std::span<const double> x_start, const IntegrateOptions& opt,
                     const RngStream& rng);

}  // namespace trajkit
