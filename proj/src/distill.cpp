#include "trajkit/distill.hpp"

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

std::span<const double> cond_of(const MicroNet& net, std::span<const double> y) {
  return net.spec().cond_dim ? y : std::span<const double>();
}

}  // namespace

GuidanceTerms guidance_terms(const NoiseSchedule& sched, double t) {
  const Coefficients c0 = sched.eval(sched.t_min());
  const Coefficients ct = sched.eval(t);
  const double q = c0.alpha / ct.alpha;
  return {q, q * ct.sigma - c0.sigma};
}

bool guidance_active(const NoiseSchedule& sched, double t) {
  return std::abs(guidance_terms(sched, t).den) >= kGuidanceCutoff;
}

void eps_tilde(const NoiseSchedule& sched, std::span<const double> x, double t,
               std::span<const double> y, std::span<double> out) {
  if (x.size() != y.size() || out.size() != x.size()) fail(ErrorKind::Argument, "eps_tilde: dimension mismatch");
  const GuidanceTerms g = guidance_terms(sched, t);
  if (std::abs(g.den) < kGuidanceSingular) {
    fail(ErrorKind::Numeric, "eps_tilde: singular guidance denominator " + g17(g.den) + " at t=" + g17(t));
  }
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (g.q * x[i] - y[i]) / g.den;
}

void guided_eps(std::span<const double> eps_theta, std::span<const double> eps_tl, double w,
                std::span<double> out) {
  if (eps_theta.size() != eps_tl.size() || out.size() != eps_theta.size()) {
    fail(ErrorKind::Argument, "guided_eps: dimension mismatch");
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (1.0 + w) * eps_theta[i] - w * eps_tl[i];
}

double snr(const NoiseSchedule& sched, double t) {
  const Coefficients c = sched.eval(t);
  return c.alpha / c.sigma;
}

std::vector<double> interp_init(const NoiseSchedule& sched, std::span<const double> y, double delta,
                                std::span<const double> z, double snr_threshold) {
  if (y.size() != z.size()) fail(ErrorKind::Argument, "interp_init: dimension mismatch");
  const double t = sched.t_max() - delta;
  if (!(delta >= 0.0) || t <= sched.t_min()) {
    fail(ErrorKind::Config, "interp_init: delta " + g17(delta) + " leaves T - delta outside (t_min, T]");
  }
  const double s = snr(sched, t);
  if (!(s < snr_threshold)) {
    fail(ErrorKind::Config, "interp_init: SNR " + g17(s) + " at T - delta = " + g17(t) +
                                " is not below the threshold " + g17(snr_threshold));
  }
  const Coefficients c = sched.eval(t);
  std::vector<double> out(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) out[i] = c.alpha * y[i] + c.sigma * z[i];
  return out;
}

double default_delta(const NoiseSchedule& sched, std::size_t teacher_steps, double snr_threshold) {
  if (teacher_steps == 0) fail(ErrorKind::Argument, "default_delta: teacher_steps must be >= 1");
  const double h = (sched.t_max() - sched.t_min()) / static_cast<double>(teacher_steps);
  double best = 0.0;
  for (std::size_t j = 0; j < teacher_steps; ++j) {
    const double delta = static_cast<double>(j) * h;
    if (snr(sched, sched.t_max() - delta) < snr_threshold) best = delta;
    else break;
  }
  return best;
}

double resolve_delta(const NoiseSchedule& sched, const DistillConfig& cfg) {
  return cfg.delta < 0.0 ? default_delta(sched, cfg.teacher_steps, cfg.snr_threshold) : cfg.delta;
}

double student_start(const NoiseSchedule& sched, const DistillConfig& cfg) {
  return cfg.interp ? sched.t_max() - resolve_delta(sched, cfg) : sched.t_max();
}

Distiller::Distiller(MicroNet& student, const MicroNet& teacher, const NoiseSchedule& sched,
                     DistillConfig cfg)
    : student_(student),
      teacher_(teacher),
      sched_(sched),
      cfg_(cfg),
      opt_(student.param_count(), cfg.adam) {
  if (cfg_.k == 0) fail(ErrorKind::Config, "distill: k must be >= 1");
  if (cfg_.batch == 0) fail(ErrorKind::Config, "distill: batch must be >= 1");
  if (!(cfg_.mix_ratio >= 0.0 && cfg_.mix_ratio <= 1.0)) fail(ErrorKind::Config, "distill: mix_ratio must lie in [0, 1]");
  if (!(student.spec() == teacher.spec())) fail(ErrorKind::Argument, "distill: student and teacher architectures differ");
  times_ = sched_.make_grid(cfg_.k, sched_.default_spacing(), student_start(sched_, cfg_)).times;
  teacher_times_ = sched_.make_grid(cfg_.teacher_steps).times;
}

std::vector<double> Distiller::start_state(std::span<const double> y, std::uint64_t stream) const {
  std::vector<double> z(y.size());
  RngStream(cfg_.seed, stream).gaussians(0, z, Draw::Start);
  if (!cfg_.interp) return z;
  return interp_init(sched_, y, resolve_delta(sched_, cfg_), z, cfg_.snr_threshold);
}

std::vector<double> Distiller::target(const ToyDataset& data, std::size_t idx, std::uint64_t stream,
                                      bool& from_teacher) const {
  const RngStream rng(cfg_.seed, stream);
  from_teacher = !(rng.uniform(1, Draw::Batch) < cfg_.mix_ratio);
  if (!from_teacher) return data.x_star[idx];
  std::vector<double> z(data.dim());
  rng.gaussians(0, z, Draw::Start);
  IntegrateOptions opt;
  opt.solver = SolverKind::Dpm1;
  const NetOracle oracle(teacher_);
  const auto tr = integrate(sched_, oracle_fn(oracle, cond_of(teacher_, data.y[idx])), teacher_times_,
                            z, opt, rng);
  return tr.endpoint();
}

DistillStepResult Distiller::step(const ToyDataset& data, std::size_t iteration) {
  std::vector<double> grad(student_.param_count(), 0.0);
  std::vector<std::vector<double>> sg(times_.size());
  double loss = 0.0;
  for (std::size_t b = 0; b < cfg_.batch; ++b) {
    const std::uint64_t stream = iteration * cfg_.batch + b;
    const std::size_t idx = static_cast<std::size_t>(RngStream(cfg_.seed, stream).uniform(0, Draw::Batch) *
                                                     static_cast<double>(data.size())) % data.size();
    bool teacher_target = false;
    const auto tgt = target(data, idx, stream, teacher_target);
    const auto& y = data.y[idx];
    const auto x0 = start_state(y, stream);
    const Rollout ro = rollout_forward(student_, sched_, times_, x0, cond_of(student_, y), cfg_.w, y);
    auto& g = sg.back();
    g.assign(data.dim(), 0.0);
    for (std::size_t i = 0; i < data.dim(); ++i) {
      const double r = ro.endpoint()[i] - tgt[i];
      loss += r * r;
      g[i] = 2.0 * r / static_cast<double>(cfg_.batch);
    }
    rollout_backward(student_, ro, sg, grad);
  }
  loss /= static_cast<double>(cfg_.batch);
  if (!std::isfinite(loss)) {
    if (++consecutive_skips_ >= cfg_.max_skips) {
      fail(ErrorKind::Numeric, "distill: " + std::to_string(consecutive_skips_) + " consecutive non-finite losses");
    }
    return {loss, true};
  }
  consecutive_skips_ = 0;
  opt_.step(student_.mutable_params(), grad);
  return {loss, false};
}

std::vector<double> distill_train(MicroNet& student, const MicroNet& teacher,
                                  const NoiseSchedule& sched, const ToyDataset& data,
                                  const DistillConfig& cfg) {
  Distiller d(student, teacher, sched, cfg);
  std::vector<double> losses;
  losses.reserve(cfg.iterations);
  for (std::size_t it = 0; it < cfg.iterations; ++it) losses.push_back(d.step(data, it).loss);
  return losses;
}

InferResult infer(const MicroNet& net, const NoiseSchedule& sched, std::span<const double> y,
                  std::span<const double> z, const DistillConfig& cfg) {
  if (cfg.k == 0) fail(ErrorKind::Config, "infer: k must be >= 1");
  std::vector<double> start(z.begin(), z.end());
  if (cfg.interp) start = interp_init(sched, y, resolve_delta(sched, cfg), z, cfg.snr_threshold);
  const auto grid = sched.make_grid(cfg.k, sched.default_spacing(), student_start(sched, cfg));
  const auto cond = cond_of(net, y);
  const double w = cfg.w;
  EpsFn fn = [&](std::span<const double> x, double t, std::size_t, std::span<double> out) {
    net.forward(x, t, cond, out);
    if (w == 0.0 || !guidance_active(sched, t)) return;
    std::vector<double> et(x.size());
    eps_tilde(sched, x, t, y, et);
    guided_eps(std::vector<double>(out.begin(), out.end()), et, w, out);
  };
  IntegrateOptions opt;
  opt.solver = SolverKind::Dpm1;
  InferResult res;
  res.trajectory = integrate(sched, fn, grid.times, start, opt, RngStream(0, 0));
  res.x0 = res.trajectory.endpoint();
  return res;
}

double infer_mse(const MicroNet& net, const NoiseSchedule& sched, const ToyDataset& data,
                 const DistillConfig& cfg, std::uint64_t seed) {
  std::vector<double> errs(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    std::vector<double> z(data.dim());
    RngStream(seed, i).gaussians(0, z, Draw::Start);
    errs[i] = mse(infer(net, sched, data.y[i], z, cfg).x0, data.x_star[i]);
  });
  double s = 0.0;
  for (double e : errs) s += e;
  return s / static_cast<double>(errs.size());
}

void eps_check(const NoiseSchedule& sched, std::span<const double> x_prev,
               std::span<const double> x_cur, double t_prev, double t_cur, std::span<double> out) {
  if (x_prev.size() != x_cur.size() || out.size() != x_cur.size()) {
    fail(ErrorKind::Argument, "eps_check: dimension mismatch");
  }
  if (!(t_prev < t_cur)) fail(ErrorKind::Argument, "eps_check: need t_prev < t_cur");
  const Coefficients ct = sched.eval(t_cur);
  const Coefficients cp = sched.eval(t_prev);
  const double r = cp.alpha / ct.alpha;
  const double den = r * ct.sigma - cp.sigma;
  if (std::abs(den) < 1e-300 || !std::isfinite(den)) {
    fail(ErrorKind::Numeric, "eps_check: degenerate step between t=" + g17(t_cur) + " and t=" + g17(t_prev));
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = (r * x_cur[i] - x_prev[i]) / den;
}

void eps_check_expanded(const NoiseSchedule& sched, std::span<const double> x_prev,
                        std::span<const double> x_cur, double t_prev, double t_cur,
                        std::span<double> out) {
  if (sched.kind() != ScheduleKind::VP) fail(ErrorKind::Unsupported, "eps_check_expanded: VP only");
  const Coefficients ct = sched.eval(t_cur);
  const Coefficients cp = sched.eval(t_prev);
  const double r = cp.alpha / ct.alpha;
  const double da = cp.alpha - ct.alpha;
  const double scale = (ct.alpha - cp.alpha) / (cp.sigma - r * ct.sigma);
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = (x_cur[i] / ct.alpha - (x_prev[i] - x_cur[i]) / da) * scale;
  }
}

std::size_t CostReport::argmax_step() const {
  std::size_t best = 0;
  for (std::size_t i = 1; i < per_step.size(); ++i) {
    if (per_step[i] > per_step[best]) best = i;
  }
  return best;
}

CostReport trajectory_cost(const NoiseSchedule& sched, const Trajectory& dense,
                           std::span<const double> sparse_times, const EpsFn& eps) {
  if (sparse_times.size() < 2) fail(ErrorKind::Argument, "trajectory_cost: need at least one sparse step");
  std::vector<std::size_t> idx;
  std::size_t from = 0;
  for (double t : sparse_times) {
    std::size_t j = from;
    while (j < dense.times.size() && std::abs(dense.times[j] - t) > 1e-12 * std::max(1.0, std::abs(t))) ++j;
    if (j == dense.times.size()) {
      fail(ErrorKind::Argument, "trajectory_cost: sparse timestamp " + g17(t) + " is not on the dense trajectory");
    }
    idx.push_back(j);
    from = j + 1;
  }
  CostReport rep;
  rep.k = sparse_times.size() - 1;
  rep.times.assign(sparse_times.begin(), sparse_times.end());
  const std::size_t d = dense.states[0].size();
  std::vector<double> ec(d), et(d);
  for (std::size_t i = 0; i + 1 < idx.size(); ++i) {
    const auto& xc = dense.states[idx[i]];
    const auto& xp = dense.states[idx[i + 1]];
    eps_check(sched, xp, xc, dense.times[idx[i + 1]], dense.times[idx[i]], ec);
    eps(xc, dense.times[idx[i]], idx[i], et);
    double s = 0.0;
    for (std::size_t j = 0; j < d; ++j) s += (ec[j] - et[j]) * (ec[j] - et[j]);
    rep.per_step.push_back(std::sqrt(s));
  }
  for (double c : rep.per_step) rep.total += c;
  return rep;
}

CostReport trajectory_cost(const NoiseSchedule& sched, const Trajectory& dense, std::size_t k,
                           const EpsFn& eps) {
  const std::size_t n = dense.steps();
  if (k == 0 || k > n) fail(ErrorKind::Argument, "trajectory_cost: k must lie in [1, dense steps]");
  std::vector<double> times(k + 1);
  for (std::size_t i = 0; i <= k; ++i) {
    times[i] = dense.times[static_cast<std::size_t>(std::llround(static_cast<double>(i * n) / static_cast<double>(k)))];
  }
  return trajectory_cost(sched, dense, times, eps);
}

CostReport average_cost(std::span<const CostReport> reports) {
  if (reports.empty()) fail(ErrorKind::Argument, "average_cost: no reports");
  CostReport out = reports[0];
  for (std::size_t n = 1; n < reports.size(); ++n) {
    if (reports[n].per_step.size() != out.per_step.size()) fail(ErrorKind::Argument, "average_cost: step count mismatch");
    for (std::size_t i = 0; i < out.per_step.size(); ++i) out.per_step[i] += reports[n].per_step[i];
  }
  out.total = 0.0;
  for (double& c : out.per_step) {
    c /= static_cast<double>(reports.size());
    out.total += c;
  }
  return out;
}

void write_cost_report(std::ostream& os, const CostReport& report, bool header) {
  if (header) os << "k,step_index,t,cost,total\n";
  for (std::size_t i = 0; i < report.per_step.size(); ++i) {
    os << report.k << "," << i << "," << g17(report.times[i]) << "," << g17(report.per_step[i]) << ","
       << g17(report.total) << "\n";
  }
}

double interp_error_ratio(const NoiseSchedule& sched, std::span<const double> x,
                          std::span<const double> y, std::span<const double> z, double delta) {
  if (x.size() != y.size() || z.size() != x.size()) fail(ErrorKind::Argument, "interp_error_ratio: dimension mismatch");
  const double t_end = sched.t_min();
  auto jump_noise_err = [&](double s, bool with_y) {
    // eps such that r x_s - eps (r sigma_s - sigma_0) = x, minus the injected z.
    const Coefficients cs = sched.eval(s);
    const Coefficients c0 = sched.eval(t_end);
    const double r = c0.alpha / cs.alpha;
    const double den = r * cs.sigma - c0.sigma;
    double acc = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double xs = (with_y ? cs.alpha * y[i] : 0.0) + cs.sigma * z[i];
      const double e = (r * xs - x[i]) / den;
      acc += (e - z[i]) * (e - z[i]);
    }
    return std::sqrt(acc);
  };
  return jump_noise_err(sched.t_max() - delta, true) / jump_noise_err(sched.t_max(), false);
}

}  // namespace trajkit
