#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "trajkit/micronet.hpp"
#include "trajkit/schedule.hpp"

namespace trajkit {

/// A DPM1 trajectory of a MicroNet oracle, recorded for reverse-mode
/// differentiation. Each step is x_{i+1} = r_i x_i - k_i eps_hat_i with
/// eps_hat = s_i eps_theta(x_i) - w (q_i x_i - y) / den_i when guidance is on.
struct Rollout {
  std::vector<double> times;
  std::vector<std::vector<double>> states;
  std::vector<GradientTape> tapes;
  std::vector<double> r;
  std::vector<double> k;
  std::vector<double> eps_scale;   // s_i: 1 + w, or 1 without guidance
  std::vector<double> guide_gain;  // w q_i / den_i, or 0 without guidance

  const std::vector<double>& endpoint() const { return states.back(); }
};

/// `cond` feeds the network; `y` feeds the guidance term and may be empty when w == 0.
Rollout rollout_forward(const MicroNet& net, const NoiseSchedule& sched, std::span<const double> times,
                        std::span<const double> x_start, std::span<const double> cond, double w,
                        std::span<const double> y);

/// state_grads[i] is dL/d states[i] (an empty entry means zero). Adds
/// dL/dtheta into grad_theta; writes dL/d states[0] into grad_start if non-empty.
void rollout_backward(const MicroNet& net, const Rollout& ro,
                      const std::vector<std::vector<double>>& state_grads,
                      std::span<double> grad_theta, std::span<double> grad_start = {});

}  // namespace trajkit
