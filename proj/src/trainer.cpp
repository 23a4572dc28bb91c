#include "trajkit/trainer.hpp"

#include <cmath>

#include "trajkit/error.hpp"

namespace trajkit {

std::vector<double> train_denoiser(MicroNet& net, const ToyDataset& data,
                                   const NoiseSchedule& sched, const TrainConfig& cfg) {
  const auto& spec = net.spec();
  if (spec.x_dim != data.dim() || spec.out_dim != data.dim()) {
    fail(ErrorKind::Argument, "train_denoiser: network and dataset dimensions differ");
  }
  if (spec.cond_dim != 0 && spec.cond_dim != data.dim()) {
    fail(ErrorKind::Argument, "train_denoiser: conditioning must be the degraded sample");
  }
  if (cfg.batch == 0) fail(ErrorKind::Argument, "train_denoiser: batch must be >= 1");
  if (sched.kind() == ScheduleKind::RectFlow) {
    fail(ErrorKind::Unsupported, "train_denoiser: eps training needs a VP or VE schedule");
  }
  const std::size_t d = data.dim();
  const bool conditional = spec.cond_dim != 0;
  Adam opt(net.param_count(), cfg.adam);
  std::vector<double> grad(net.param_count());
  std::vector<double> eps(d), xt(d), pred(d), up(d);
  GradientTape tape;
  std::vector<double> history;
  history.reserve(cfg.steps);
  RngCursor pick(cfg.seed, 0, Draw::Batch);
  const double scale = 2.0 / static_cast<double>(cfg.batch * d);

  for (std::size_t it = 0; it < cfg.steps; ++it) {
    std::fill(grad.begin(), grad.end(), 0.0);
    const RngStream noise(cfg.seed, 1 + it);
    double loss = 0.0;
    for (std::size_t b = 0; b < cfg.batch; ++b) {
      const std::size_t idx = pick.below(data.size());
      const double t = sched.t_min() + (sched.t_max() - sched.t_min()) *
                                           noise.uniform(static_cast<std::uint32_t>(b), Draw::Batch);
      noise.gaussians(static_cast<std::uint32_t>(b), eps, Draw::Step);
      const Coefficients c = sched.eval(t);
      const auto& x0 = data.x_star[idx];
      for (std::size_t i = 0; i < d; ++i) xt[i] = c.alpha * x0[i] + c.sigma * eps[i];
      const std::span<const double> cond =
          conditional ? std::span<const double>(data.y[idx]) : std::span<const double>();
      net.forward(xt, t, cond, pred, tape);
      for (std::size_t i = 0; i < d; ++i) {
        const double r = pred[i] - eps[i];
        loss += r * r;
        up[i] = scale * r;
      }
      net.backward(tape, up, grad, {});
    }
    loss /= static_cast<double>(cfg.batch * d);
    if (!std::isfinite(loss)) {
      fail(ErrorKind::Numeric, "train_denoiser: non-finite loss at step " + std::to_string(it));
    }
    history.push_back(loss);
    opt.step(net.mutable_params(), grad);
  }
  return history;
}

}  // namespace trajkit
