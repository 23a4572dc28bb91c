#include "trajkit/rollout.hpp"

#include <cmath>

#include "trajkit/distill.hpp"
#include "trajkit/error.hpp"

namespace trajkit {

Rollout rollout_forward(const MicroNet& net, const NoiseSchedule& sched, std::span<const double> times,
                        std::span<const double> x_start, std::span<const double> cond, double w,
                        std::span<const double> y) {
  if (times.size() < 2) fail(ErrorKind::Argument, "rollout: grid needs at least one step");
  const std::size_t d = x_start.size();
  if (w != 0.0 && y.size() != d) fail(ErrorKind::Argument, "rollout: guidance needs y of state dimension");
  const std::size_t steps = times.size() - 1;
  Rollout ro;
  ro.times.assign(times.begin(), times.end());
  ro.states.reserve(steps + 1);
  ro.states.emplace_back(x_start.begin(), x_start.end());
  ro.tapes.resize(steps);
  std::vector<double> e(d);
  for (std::size_t i = 0; i < steps; ++i) {
    const double t = times[i], tp = times[i + 1];
    if (!(tp < t)) fail(ErrorKind::Argument, "rollout: grid must be strictly descending");
    const Coefficients ct = sched.eval(t);
    const Coefficients cp = sched.eval(tp);
    const double r = cp.alpha / ct.alpha;
    const double k = r * ct.sigma - cp.sigma;
    const auto& x = ro.states[i];
    net.forward(x, t, cond, e, ro.tapes[i]);
    double s = 1.0, gain = 0.0;
    std::vector<double> next(d);
    if (w != 0.0 && guidance_active(sched, t)) {
      const GuidanceTerms g = guidance_terms(sched, t);
      s = 1.0 + w;
      gain = w * g.q / g.den;
      for (std::size_t j = 0; j < d; ++j) {
        const double eh = s * e[j] - w * (g.q * x[j] - y[j]) / g.den;
        next[j] = r * x[j] - k * eh;
      }
    } else {
      for (std::size_t j = 0; j < d; ++j) next[j] = r * x[j] - k * e[j];
    }
    for (double v : next) {
      if (!std::isfinite(v)) fail(ErrorKind::Numeric, "rollout: state diverged at step " + std::to_string(i));
    }
    ro.r.push_back(r);
    ro.k.push_back(k);
    ro.eps_scale.push_back(s);
    ro.guide_gain.push_back(gain);
    ro.states.push_back(std::move(next));
  }
  return ro;
}

void rollout_backward(const MicroNet& net, const Rollout& ro,
                      const std::vector<std::vector<double>>& state_grads,
                      std::span<double> grad_theta, std::span<double> grad_start) {
  const std::size_t steps = ro.tapes.size();
  if (state_grads.size() != steps + 1) fail(ErrorKind::Argument, "rollout_backward: need one gradient per state");
  const std::size_t d = ro.states[0].size();
  std::vector<double> g(d, 0.0), up(d), gx(d);
  auto add = [&](std::size_t i) {
    if (state_grads[i].empty()) return;
    if (state_grads[i].size() != d) fail(ErrorKind::Argument, "rollout_backward: gradient size mismatch");
    for (std::size_t j = 0; j < d; ++j) g[j] += state_grads[i][j];
  };
  add(steps);
  for (std::size_t i = steps; i-- > 0;) {
    // x_{i+1} = r x_i - k (s eps(x_i) - gain x_i + const)
    const double c = -ro.k[i] * ro.eps_scale[i];
    for (std::size_t j = 0; j < d; ++j) up[j] = c * g[j];
    net.backward(ro.tapes[i], up, grad_theta, gx);
    const double lin = ro.r[i] + ro.k[i] * ro.guide_gain[i];
    for (std::size_t j = 0; j < d; ++j) g[j] = lin * g[j] + gx[j];
    add(i);
  }
  if (!grad_start.empty()) std::copy(g.begin(), g.end(), grad_start.begin());
}

}  // namespace trajkit
