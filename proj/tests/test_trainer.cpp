#include <doctest.h>

#include <numeric>

#include "trajkit/trainer.hpp"

using namespace trajkit;

TEST_CASE("conditional denoiser training reduces the loss") {
  const auto sched = NoiseSchedule::vp();
  const auto data = gen_dataset(DatasetKind::GaussianShift, 256, DegradationOp::scaled(2, 0.7, 0.05), 1);
  MicroNetSpec spec;
  spec.cond_dim = 2;
  spec.hidden = {32, 32};
  MicroNet net(spec, 2);
  TrainConfig cfg;
  cfg.steps = 600;
  cfg.batch = 32;
  cfg.seed = 3;
  const auto loss = train_denoiser(net, data, sched, cfg);
  REQUIRE(loss.size() == 600);
  const double first = std::accumulate(loss.begin(), loss.begin() + 50, 0.0) / 50;
  const double last = std::accumulate(loss.end() - 50, loss.end(), 0.0) / 50;
  CHECK(last < 0.7 * first);
}

TEST_CASE("training is reproducible") {
  const auto sched = NoiseSchedule::vp();
  const auto data = gen_dataset(DatasetKind::Ring, 64, DegradationOp::scaled(2, 0.7, 0.05), 4);
  MicroNetSpec spec;
  spec.hidden = {8};
  MicroNet a(spec, 1), b(spec, 1);
  TrainConfig cfg;
  cfg.steps = 20;
  cfg.batch = 8;
  train_denoiser(a, data, sched, cfg);
  train_denoiser(b, data, sched, cfg);
  CHECK(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
}
