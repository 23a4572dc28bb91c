#include "trajkit/align.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "trajkit/error.hpp"
#include "trajkit/parallel.hpp"
#include "trajkit/rollout.hpp"

namespace trajkit {
namespace {

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double softplus(double z) { return z > 30.0 ? z : std::log1p(std::exp(z)); }
double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::span<const double> cond_of(const MicroNet& net, std::span<const double> y) {
  return net.spec().cond_dim ? y : std::span<const double>();
}

}  // namespace

MicroNetSpec GammaModulator::default_spec(std::vector<std::size_t> hidden) {
  MicroNetSpec s;
  s.x_dim = 1;
  s.cond_dim = 0;
  s.out_dim = 1;
  s.hidden = std::move(hidden);
  s.n_freq = 0;
  return s;
}

GammaModulator::GammaModulator(std::uint64_t seed, std::vector<std::size_t> hidden)
    : net_(default_spec(std::move(hidden)), seed) {}

GammaModulator::GammaModulator(MicroNet net) : net_(std::move(net)) {
  const auto& s = net_.spec();
  if (s.x_dim != 1 || s.out_dim != 1 || s.cond_dim != 0) {
    fail(ErrorKind::Argument, "GammaModulator: network must map (err, t) to one output");
  }
}

double GammaModulator::eval(double err, double t) const {
  if (!std::isfinite(err) || !std::isfinite(t) || err < 0.0) {
    fail(ErrorKind::Argument, "gamma_eval: need finite err >= 0 and finite t, got err=" + g17(err) + " t=" + g17(t));
  }
  double out;
  const double in[1] = {std::log1p(err)};
  net_.forward(in, t, {}, std::span<double>(&out, 1));
  return softplus(out);
}

double GammaModulator::eval(double err, double t, GradientTape& tape) const {
  if (!std::isfinite(err) || !std::isfinite(t) || err < 0.0) {
    fail(ErrorKind::Argument, "gamma_eval: need finite err >= 0 and finite t");
  }
  double out;
  const double in[1] = {std::log1p(err)};
  net_.forward(in, t, {}, std::span<double>(&out, 1), tape);
  return softplus(out);
}

void GammaModulator::backward(const GradientTape& tape, double upstream, std::span<double> grad_psi) const {
  // softplus' = sigmoid of the pre-activation, recovered from the last layer.
  const auto& last_in = tape.inputs.back();
  const auto p = net_.params();
  const std::size_t cols = last_in.size();
  const std::size_t off = p.size() - (cols + 1);
  double z = p[off + cols];
  for (std::size_t j = 0; j < cols; ++j) z += p[off + j] * last_in[j];
  const double up[1] = {upstream * sigmoid(z)};
  net_.backward(tape, up, grad_psi, {});
}

double one_jump_error(const NoiseSchedule& sched, std::span<const double> x, double t,
                      std::span<const double> eps, std::span<const double> x_star) {
  const double t0 = sched.t_min();
  if (t <= t0) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - x_star[i]) * (x[i] - x_star[i]);
    return std::sqrt(s);
  }
  std::vector<double> x0(x.size());
  dpm1_step(sched, x, t, t0, eps, x0);
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x0[i] - x_star[i]) * (x0[i] - x_star[i]);
  return std::sqrt(s);
}

std::vector<Candidate> sample_candidates(const EpsFn& eps, const NoiseSchedule& sched,
                                         const GammaModulator& mod, std::span<const double> x_tau,
                                         std::span<const double> times, std::span<const double> x_star,
                                         const AlignConfig& cfg, std::uint64_t stream_base) {
  const std::size_t N = cfg.n_candidates;
  if (N == 0) fail(ErrorKind::Argument, "sample_candidates: need at least one candidate");
  IntegrateOptions base;
  base.solver = sched.kind() == ScheduleKind::VE ? SolverKind::MsdeVe : SolverKind::MsdeVp;
  base.noise = cfg.noise;
  std::vector<Candidate> out(N);
  parallel_for(N, [&](std::size_t n) {
    Candidate& c = out[n];
    auto attempt = [&](std::uint64_t stream) {
      const RngStream rng(cfg.seed, stream);
      c.multiplier = cfg.gamma_override ? 1.0 : std::exp(cfg.gamma_explore * rng.gaussian(0, Draw::Candidate));
      c.errors.clear();
      IntegrateOptions opt = base;
      opt.gamma_fn = [&](std::size_t, double t, std::span<const double> x, std::span<const double> e) {
        const double err = one_jump_error(sched, x, t, e, x_star);
        c.errors.push_back(err);
        return cfg.gamma_override ? *cfg.gamma_override : std::min(cfg.gamma_max, c.multiplier * mod.eval(err, t));
      };
      c.trajectory = integrate(sched, eps, times, x_tau, opt, rng);
    };
    try {
      attempt(stream_base + n);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Numeric) throw;
      try {
        attempt(stream_base + N + n);
      } catch (const Error& e2) {
        if (e2.kind() != ErrorKind::Numeric) throw;
        fail(ErrorKind::Numeric, "sample_candidates: candidate " + std::to_string(n) + " diverged twice");
      }
    }
  });
  return out;
}

std::size_t select_best(std::span<const double> rewards) {
  if (rewards.empty()) fail(ErrorKind::Argument, "select_best: no candidates");
  std::size_t best = rewards.size();
  for (std::size_t i = 0; i < rewards.size(); ++i) {
    if (!std::isfinite(rewards[i])) continue;
    if (best == rewards.size() || rewards[i] > rewards[best]) best = i;
  }
  if (best == rewards.size()) fail(ErrorKind::Numeric, "select_best: every reward is non-finite");
  return best;
}

Aligner::Aligner(MicroNet& theta, GammaModulator& psi, const NoiseSchedule& sched, AlignConfig cfg)
    : theta_(theta),
      psi_(psi),
      sched_(sched),
      cfg_(std::move(cfg)),
      opt_theta_(theta.param_count(), cfg_.adam),
      opt_psi_(psi.net().param_count(), cfg_.mod_adam) {
  if (cfg_.n_candidates < 2) fail(ErrorKind::Config, "align: n_candidates must be >= 2");
  if (!(cfg_.adam.lr > 0.0)) fail(ErrorKind::Config, "align: learning rate must be > 0");
  if (cfg_.steps == 0) fail(ErrorKind::Config, "align: steps must be >= 1");
  times_ = sched_.make_grid(cfg_.steps).times;
}

double Aligner::reward_of(std::span<const double> x_hat, std::span<const double> x_star) const {
  return cfg_.custom_reward ? cfg_.custom_reward(x_hat, x_star) : reward(cfg_.reward, x_hat, x_star);
}

AlignStepResult Aligner::step(std::span<const double> x_star, std::span<const double> y,
                              std::size_t iteration) {
  const RngStream rng(cfg_.seed, iteration);
  std::vector<double> xT(x_star.size());
  rng.gaussians(0, xT, Draw::Start);
  const auto tau = static_cast<std::size_t>(rng.uniform(0, Draw::Misc) * static_cast<double>(cfg_.steps)) % cfg_.steps;
  return step(x_star, y, xT, tau, iteration);
}

AlignStepResult Aligner::step(std::span<const double> x_star, std::span<const double> y,
                              std::span<const double> x_T, std::size_t tau_index, std::size_t iteration) {
  if (tau_index >= cfg_.steps) fail(ErrorKind::Argument, "align: tau index outside the grid");
  const std::size_t d = x_star.size();
  const auto cond = cond_of(theta_, y);
  const NetOracle oracle(theta_);
  const EpsFn eps = oracle_fn(oracle, cond);

  std::vector<double> x_tau(x_T.begin(), x_T.end());
  if (tau_index > 0) {
    IntegrateOptions ode;
    ode.solver = SolverKind::Dpm1;
    x_tau = integrate(sched_, eps, std::span(times_).first(tau_index + 1), x_T, ode, RngStream(0, 0)).endpoint();
  }
  const std::span<const double> sub = std::span(times_).subspan(tau_index);
  const Rollout ro = rollout_forward(theta_, sched_, sub, x_tau, cond, 0.0, {});
  auto cands = sample_candidates(eps, sched_, psi_, x_tau, sub, x_star, cfg_,
                                 static_cast<std::uint64_t>(iteration) * 2 * cfg_.n_candidates);

  AlignStepResult res;
  res.tau_index = tau_index;
  std::vector<double> rewards;
  double gsum = 0.0;
  std::size_t gcount = 0;
  for (auto& c : cands) {
    c.reward = reward_of(c.trajectory.endpoint(), x_star);
    rewards.push_back(c.reward);
    for (double g : c.trajectory.gammas) gsum += g, ++gcount;
  }
  const std::size_t best = select_best(rewards);
  const auto& win = cands[best];
  res.reward_best = rewards[best];
  double rs = 0.0;
  std::size_t rn = 0;
  for (double r : rewards) {
    if (std::isfinite(r)) rs += r, ++rn;
  }
  res.reward_mean = rs / static_cast<double>(rn);
  res.gamma_mean = gcount ? gsum / static_cast<double>(gcount) : 0.0;

  // Loss and its gradient with respect to the ODE states.
  std::vector<std::vector<double>> sg(ro.states.size());
  double loss = 0.0;
  for (std::size_t i = 1; i < ro.states.size(); ++i) {
    const auto& a = ro.states[i];
    const auto& b = win.trajectory.states[i];
    loss += divergence(cfg_.divergence, a, b);
    sg[i].assign(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
      const double r = a[j] - b[j];
      sg[i][j] = cfg_.divergence.kind == DivergenceKind::SqL2 ? 2.0 * r : (r > 0.0) - (r < 0.0);
    }
  }
  const auto& end = ro.endpoint();
  for (std::size_t j = 0; j < d; ++j) {
    const double r = end[j] - x_star[j];
    loss += cfg_.anchor_weight * r * r;
    sg.back()[j] += 2.0 * cfg_.anchor_weight * r;
  }
  res.loss = loss;
  if (!std::isfinite(loss)) {
    res.skipped = true;
    if (++consecutive_skips_ >= cfg_.max_skips) {
      fail(ErrorKind::Numeric, "align: " + std::to_string(consecutive_skips_) + " consecutive non-finite losses");
    }
    return res;
  }
  consecutive_skips_ = 0;

  std::vector<double> grad(theta_.param_count(), 0.0);
  rollout_backward(theta_, ro, sg, grad);
  opt_theta_.step(theta_.mutable_params(), grad);

  if (!cfg_.gamma_override && !win.trajectory.gammas.empty()) {
    // Regress gamma_psi toward the gammas that produced the winning trajectory.
    std::vector<double> gpsi(psi_.net().param_count(), 0.0);
    GradientTape tape;
    const auto m = static_cast<double>(win.trajectory.gammas.size());
    for (std::size_t i = 0; i < win.trajectory.gammas.size(); ++i) {
      const double g = psi_.eval(win.errors[i], sub[i], tape);
      psi_.backward(tape, 2.0 * (g - win.trajectory.gammas[i]) / m, gpsi);
    }
    opt_psi_.step(psi_.net().mutable_params(), gpsi);
  }
  return res;
}

std::vector<AlignMetrics> align_train(MicroNet& theta, GammaModulator& psi, const NoiseSchedule& sched,
                                      const ToyDataset& data, const AlignConfig& cfg) {
  Aligner aligner(theta, psi, sched, cfg);
  std::vector<AlignMetrics> rows;
  rows.reserve(cfg.iterations);
  for (std::size_t it = 0; it < cfg.iterations; ++it) {
    const auto idx = static_cast<std::size_t>(RngStream(cfg.seed, it).uniform(1, Draw::Batch) *
                                              static_cast<double>(data.size())) % data.size();
    const auto r = aligner.step(data.x_star[idx], data.y[idx], it);
    rows.push_back({it, r.loss, r.reward_best, r.reward_mean, r.gamma_mean});
  }
  return rows;
}

void write_metrics(std::ostream& os, std::span<const AlignMetrics> rows) {
  os << "iteration,loss,reward_best,reward_mean,gamma_mean\n";
  for (const auto& r : rows) {
    os << r.iteration << "," << g17(r.loss) << "," << g17(r.reward_best) << "," << g17(r.reward_mean) << ","
       << g17(r.gamma_mean) << "\n";
  }
}

double ode_endpoint_mse(const MicroNet& net, const NoiseSchedule& sched, const ToyDataset& data,
                        std::size_t k, std::uint64_t seed) {
  const auto grid = sched.make_grid(k);
  std::vector<double> errs(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    const RngStream rng(seed, i);
    std::vector<double> z(data.dim());
    rng.gaussians(0, z, Draw::Start);
    const NetOracle oracle(net);
    IntegrateOptions opt;
    opt.solver = SolverKind::Dpm1;
    const auto tr = integrate(sched, oracle_fn(oracle, cond_of(net, data.y[i])), grid.times, z, opt, rng);
    errs[i] = mse(tr.endpoint(), data.x_star[i]);
  });
  double s = 0.0;
  for (double e : errs) s += e;
  return s / static_cast<double>(errs.size());
}

}  // namespace trajkit
