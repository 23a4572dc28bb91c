#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "trajkit/micronet.hpp"
#include "trajkit/schedule.hpp"
#include "trajkit/task.hpp"

namespace trajkit {

struct TrainConfig {
  std::size_t steps = 3000;
  std::size_t batch = 64;
  AdamConfig adam{};
  std::uint64_t seed = 0;
};

/// Minimises E || eps - eps_theta(alpha_t x* + sigma_t eps, t, y) ||^2 (per
/// coordinate mean) with t ~ U[t_min, t_max]. The net is conditioned on y
/// when its cond_dim is non-zero. Returns the per-step minibatch loss.
std::vector<double> train_denoiser(MicroNet& net, const ToyDataset& data,
                                   const NoiseSchedule& sched, const TrainConfig& cfg);

}  // namespace trajkit
