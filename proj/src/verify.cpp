#include "trajkit/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include "trajkit/align.hpp"
#include "trajkit/checkpoint.hpp"
#include "trajkit/commands.hpp"
#include "trajkit/config.hpp"
#include "trajkit/distill.hpp"
#include "trajkit/error.hpp"
#include "trajkit/integrator.hpp"
#include "trajkit/kernels.hpp"
#include "trajkit/oracle.hpp"
#include "trajkit/parallel.hpp"
#include "trajkit/rng.hpp"
#include "trajkit/rollout.hpp"
#include "trajkit/stats.hpp"
#include "trajkit/trainer.hpp"

namespace trajkit {
namespace {

std::string g6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CheckResult result(std::string id, bool passed, double value, double threshold, std::string detail) {
  return CheckResult{std::move(id), passed, value, threshold, std::move(detail)};
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double rel_err(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(d) / std::max(norm(b), 1e-12);
}

// Conditional ring-restoration fixture shared by the alignment and distillation criteria.
struct RingFixture {
  NoiseSchedule sched = NoiseSchedule::vp();
  ToyDataset train;
  ToyDataset test;
  MicroNet teacher;
};

RingFixture ring_fixture(std::uint64_t seed, const CriteriaOptions& o) {
  RingFixture f;
  const auto op = DegradationOp::scaled(2, 0.7, 0.05);
  f.train = gen_dataset(DatasetKind::Ring, o.task_n, op, seed);
  f.test = gen_dataset(DatasetKind::Ring, o.test_n, op, seed + 1000003);
  MicroNetSpec spec;
  spec.cond_dim = 2;
  f.teacher = MicroNet(spec, seed);
  TrainConfig tc;
  tc.steps = o.pretrain_steps;
  tc.seed = seed;
  train_denoiser(f.teacher, f.train, f.sched, tc);
  return f;
}

std::vector<double> gaussians(RngCursor& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> v(n);
  rng.gaussians(v);
  for (double& x : v) x *= scale;
  return v;
}

}  // namespace

CheckResult criterion_marginal_preservation(const CriteriaOptions& o) {
  const auto sched = NoiseSchedule::vp();
  const std::vector<double> mu{2.0, 2.0};
  const GaussianOracle oracle(sched, mu, 1.0);
  const auto grid = sched.make_grid(o.marginal_steps, Spacing::UniformLambda);
  const std::size_t n = o.marginal_trajectories;
  std::vector<double> m(2), var(2);
  oracle.marginal(sched.t_min(), m, var);
  const std::vector<double> cov_ref{var[0], 0.0, 0.0, var[1]};

  bool ok = true;
  double worst_cov = 0.0;
  double worst_mean = 0.0;
  std::string detail;
  for (double gamma : {0.0, 0.5, 1.0}) {
    std::vector<std::vector<double>> ends(n);
    IntegrateOptions opt;
    opt.solver = SolverKind::MsdeVp;
    opt.gammas = {gamma};
    parallel_for(n, [&](std::size_t i) {
      const RngStream rng(11, i);
      std::vector<double> z(2);
      rng.gaussians(0, z, Draw::Start);
      ends[i] = integrate(sched, oracle_fn(oracle), grid.times, z, opt, rng).endpoint();
    });
    const auto mc = mean_cov(ends);
    double mean_z = 0.0;
    for (std::size_t a = 0; a < 2; ++a) {
      const double se = std::sqrt(mc.cov[a * 2 + a] / static_cast<double>(n));
      mean_z = std::max(mean_z, std::abs(mc.mean[a] - m[a]) / se);
    }
    const double cov_err = frobenius_rel_error(mc.cov, cov_ref);
    ok = ok && mean_z <= 4.0 && cov_err <= 0.05;
    worst_cov = std::max(worst_cov, cov_err);
    worst_mean = std::max(worst_mean, mean_z);
    detail += "gamma=" + g6(gamma) + ": mean_z=" + g6(mean_z) + " cov_err=" + g6(cov_err) + "; ";
  }
  detail += "worst mean deviation " + g6(worst_mean) + " standard errors (limit 4)";
  return result("marginal_preservation", ok, worst_cov, 0.05, detail);
}

CheckResult criterion_exact_degenerations(const CriteriaOptions& o) {
  const auto sched = NoiseSchedule::vp();
  RngCursor rng(21, 0, Draw::Misc);
  double worst_msde = 0.0;
  double worst_rf = 0.0;
  std::vector<double> a(2), b(2);
  for (std::size_t c = 0; c < o.degeneration_cases; ++c) {
    const double t = sched.t_min() + (sched.t_max() - sched.t_min()) * rng.uniform();
    const double tp = sched.t_min() + (t - sched.t_min()) * rng.uniform();
    const auto x = gaussians(rng, 2, 2.0);
    const auto eps = gaussians(rng, 2);
    const auto z = gaussians(rng, 2);
    msde_vp_step(sched, x, t, tp, eps, 0.0, z, a);
    dpm1_step(sched, x, t, tp, eps, b);
    for (std::size_t i = 0; i < 2; ++i) worst_msde = std::max(worst_msde, std::abs(a[i] - b[i]));

    const double rt = 0.02 + 0.97 * rng.uniform();
    const double dt = (rt - 0.01) * rng.uniform();
    rf_sde_step(x, rt, dt, eps, 1.0, z, a);
    rf_ode_step(x, rt, rt - dt, eps, b);
    for (std::size_t i = 0; i < 2; ++i) worst_rf = std::max(worst_rf, std::abs(a[i] - b[i]));
  }
  const double worst = std::max(worst_msde, worst_rf);
  return result("exact_degenerations", worst <= 1e-12, worst, 1e-12,
                "msde(gamma=0) vs dpm1 max diff " + g6(worst_msde) + ", rf_sde(alpha=1) vs rf_ode max diff " +
                    g6(worst_rf) + " over " + std::to_string(o.degeneration_cases) + " cases");
}

CheckResult criterion_beta_asymptotic(const CriteriaOptions&) {
  const double dt = 1e-4;
  const double t = 0.5;  // t / (1 - t) = 1, where the limit is sqrt(2 (alpha - 1))
  double worst = 0.0;
  std::string detail;
  for (double alpha : {1.5, 2.0, 4.0}) {
    const double ref = std::sqrt(2.0 * (alpha - 1.0));
    const double err = std::abs(rf_sde_beta(t, dt, alpha) / std::sqrt(dt) - ref) / ref;
    worst = std::max(worst, err);
    detail += "alpha=" + g6(alpha) + ": rel_err=" + g6(err) + "; ";
  }
  return result("beta_asymptotic", worst < 1e-3, worst, 1e-3, detail + "t=0.5, dt=1e-4");
}

CheckResult criterion_rf_equivalence(const CriteriaOptions& o) {
  const auto sched = NoiseSchedule::rect_flow(0.01);
  const auto grid = sched.make_grid(o.rf_steps, Spacing::UniformT);
  const std::vector<double> mean{2.0, 2.0};
  const double scale = 0.5;
  EpsFn vel = [&](std::span<const double> x, double t, std::size_t, std::span<double> out) {
    rf_gaussian_velocity(mean, scale, x, t, out);
  };
  const std::size_t n = o.rf_samples;
  auto cloud = [&](SolverKind solver, std::uint64_t seed) {
    std::vector<std::vector<double>> ends(n);
    IntegrateOptions opt;
    opt.solver = solver;
    opt.alpha_mod = 1.5;
    parallel_for(n, [&](std::size_t i) {
      const RngStream rng(seed, i);
      std::vector<double> z(2);
      rng.gaussians(0, z, Draw::Start);
      ends[i] = integrate(sched, vel, grid.times, z, opt, rng).endpoint();
    });
    return PointCloud::from_points(ends);
  };
  const auto ode = cloud(SolverKind::RfOde, 31);
  const auto sde = cloud(SolverKind::RfSde, 32);
  const auto test = energy_permutation_test(ode, sde, o.rf_permutations, 33);
  return result("rf_equivalence", test.p_value > 0.01, test.p_value, 0.01,
                "energy statistic " + g6(test.statistic) + ", p=" + g6(test.p_value) + " over " +
                    std::to_string(test.permutations) + " permutations, " + std::to_string(n) +
                    " samples per cloud");
}

CheckResult criterion_cost_trends(const CriteriaOptions& o) {
  const auto sched = NoiseSchedule::vp();
  const GaussianOracle oracle(sched, {2.0, 2.0}, 1.0);
  const auto eps = oracle_fn(oracle);
  const auto grid = sched.make_grid(40, Spacing::UniformLambda);
  const std::vector<std::size_t> ks{1, 2, 4, 5, 8, 10};
  const std::size_t n = o.cost_trajectories;
  std::vector<Trajectory> dense(n);
  parallel_for(n, [&](std::size_t i) {
    const RngStream rng(41, i);
    std::vector<double> z(2);
    rng.gaussians(0, z, Draw::Start);
    dense[i] = integrate(sched, eps, grid.times, z, IntegrateOptions{}, rng);
  });
  std::vector<double> totals;
  bool first5 = false;
  std::string detail = "totals:";
  for (auto k : ks) {
    std::vector<CostReport> reps(n);
    for (std::size_t i = 0; i < n; ++i) reps[i] = trajectory_cost(sched, dense[i], k, eps);
    const auto avg = average_cost(reps);
    totals.push_back(avg.total);
    detail += " k=" + std::to_string(k) + ":" + g6(avg.total);
    if (k == 5) {
      first5 = avg.first_step_dominant();
      detail += " (k=5 per-step";
      for (double c : avg.per_step) detail += " " + g6(c);
      detail += ")";
    }
  }
  double worst_rise = -INFINITY;
  for (std::size_t i = 1; i < totals.size(); ++i) worst_rise = std::max(worst_rise, totals[i] - totals[i - 1]);
  const bool monotone = worst_rise <= 1e-12 * std::max(1.0, totals.front());
  detail += monotone ? "; weakly decreasing" : "; not weakly decreasing";
  detail += first5 ? "; k=5 first step dominant" : "; k=5 first step not dominant";
  return result("cost_trends", monotone && first5, worst_rise, 0.0, detail);
}

CheckResult criterion_alignment_efficacy(const CriteriaOptions& o) {
  std::vector<double> pre(o.seeds), post(o.seeds);
  std::string detail;
  std::size_t wins = 0;
  for (std::size_t s = 0; s < o.seeds; ++s) {
    auto f = ring_fixture(100 + s, o);
    pre[s] = ode_endpoint_mse(f.teacher, f.sched, f.test, 10, 900 + s);
    MicroNet theta = f.teacher;
    GammaModulator psi(200 + s);
    AlignConfig cfg;
    cfg.iterations = o.align_iterations;
    cfg.seed = 300 + s;
    align_train(theta, psi, f.sched, f.train, cfg);
    post[s] = ode_endpoint_mse(theta, f.sched, f.test, 10, 900 + s);
    if (post[s] < pre[s]) ++wins;
    detail += "seed " + std::to_string(s) + ": " + g6(pre[s]) + " -> " + g6(post[s]) + "; ";
  }
  const auto tt = paired_t_test_greater(pre, post);
  const std::size_t need = (4 * o.seeds + 4) / 5;
  detail += std::to_string(wins) + "/" + std::to_string(o.seeds) + " improved, paired t p=" + g6(tt.p_value);
  return result("alignment_efficacy", wins >= need && tt.p_value < 0.05, tt.p_value, 0.05, detail);
}

CheckResult criterion_distillation_efficacy(const CriteriaOptions& o) {
  std::vector<double> base(o.seeds), plain(o.seeds), guided(o.seeds);
  std::string detail;
  bool beats = true;
  bool no_degrade = true;
  double worst_ratio = 0.0;
  for (std::size_t s = 0; s < o.seeds; ++s) {
    auto f = ring_fixture(100 + s, o);
    DistillConfig a;
    a.k = 1;
    a.interp = false;
    a.w = 0.0;
    a.iterations = o.distill_iterations;
    a.seed = 400 + s;
    base[s] = infer_mse(f.teacher, f.sched, f.test, a, 900 + s);

    MicroNet sb = f.teacher;
    distill_train(sb, f.teacher, f.sched, f.train, a);
    plain[s] = infer_mse(sb, f.sched, f.test, a, 900 + s);

    DistillConfig c = a;
    c.interp = true;
    c.w = 0.1;
    MicroNet sc = f.teacher;
    distill_train(sc, f.teacher, f.sched, f.train, c);
    guided[s] = infer_mse(sc, f.sched, f.test, c, 900 + s);

    beats = beats && plain[s] < base[s];
    worst_ratio = std::max(worst_ratio, guided[s] / plain[s]);
    no_degrade = no_degrade && guided[s] <= 1.05 * plain[s];
    detail += "seed " + std::to_string(s) + ": undistilled " + g6(base[s]) + ", distilled " + g6(plain[s]) +
              ", interp+guidance " + g6(guided[s]) + "; ";
  }
  double mp = 0.0, mg = 0.0;
  for (std::size_t s = 0; s < o.seeds; ++s) {
    mp += plain[s];
    mg += guided[s];
  }
  const bool mean_better = mg < mp;
  detail += "mean distilled " + g6(mp / static_cast<double>(o.seeds)) + " vs interp+guidance " +
            g6(mg / static_cast<double>(o.seeds));
  return result("distillation_efficacy", beats && no_degrade && mean_better, worst_ratio, 1.05, detail);
}

CheckResult criterion_interp_bound(const CriteriaOptions& o) {
  const auto sched = NoiseSchedule::vp();
  const auto op = DegradationOp::scaled(2, 0.7, 0.0);
  const auto data = gen_dataset(DatasetKind::GaussianShift, o.probe_samples, op, 51);
  double ratio = 0.0;
  double bound = 0.0;
  std::vector<double> z(2), diff(2);
  for (std::size_t i = 0; i < data.size(); ++i) {
    RngStream(52, i).gaussians(0, z, Draw::Start);
    ratio += interp_error_ratio(sched, data.x_star[i], data.y[i], z, 0.0);
    for (std::size_t k = 0; k < 2; ++k) diff[k] = data.x_star[i][k] - data.y[i][k];
    bound += norm(diff) / norm(data.x_star[i]);
  }
  ratio /= static_cast<double>(data.size());
  bound /= static_cast<double>(data.size());
  return result("interp_bound", ratio <= bound + 0.05, ratio, bound + 0.05,
                "mean ratio " + g6(ratio) + ", mean ||X-Y||/||X|| " + g6(bound) + ", delta=0");
}

CheckResult criterion_gradient_integrity(const CriteriaOptions& o) {
  const double h = 1e-5;
  RngCursor rng(61, 0, Draw::Misc);
  double worst = 0.0;
  std::size_t cases = 0;
  auto record = [&](double e) {
    worst = std::max(worst, e);
    ++cases;
  };
  const std::size_t per_kind = std::max<std::size_t>(1, o.gradient_cases / 3);

  for (std::size_t c = 0; c < per_kind; ++c) {
    MicroNetSpec spec;
    spec.cond_dim = c % 2 ? 2 : 0;
    spec.hidden = {8, 6};
    spec.n_freq = c % 3;
    MicroNet net(spec, 1000 + c);
    const auto x = gaussians(rng, 2);
    const auto cond = gaussians(rng, spec.cond_dim);
    const auto u = gaussians(rng, 2);
    const double t = 0.05 + 0.9 * rng.uniform();
    GradientTape tape;
    std::vector<double> out(2), gth(net.param_count(), 0.0), gx(2);
    net.forward(x, t, cond, out, tape);
    net.backward(tape, u, gth, gx);
    auto loss = [&](std::span<const double> xx) {
      const auto y = net.forward(xx, t, cond);
      return y[0] * u[0] + y[1] * u[1];
    };
    std::vector<double> fd_th(net.param_count()), fd_x(2);
    for (std::size_t j = 0; j < net.param_count(); ++j) {
      const double p0 = net.params()[j];
      net.mutable_params()[j] = p0 + h;
      const double lp = loss(x);
      net.mutable_params()[j] = p0 - h;
      const double lm = loss(x);
      net.mutable_params()[j] = p0;
      fd_th[j] = (lp - lm) / (2 * h);
    }
    for (std::size_t j = 0; j < 2; ++j) {
      auto xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      fd_x[j] = (loss(xp) - loss(xm)) / (2 * h);
    }
    record(std::max(rel_err(gth, fd_th), rel_err(gx, fd_x)));
  }

  for (std::size_t c = 0; c < per_kind; ++c) {
    GammaModulator mod(2000 + c, {8, 8});
    const double err = 3.0 * rng.uniform();
    const double t = rng.uniform();
    const double u = rng.gaussian();
    GradientTape tape;
    mod.eval(err, t, tape);
    std::vector<double> g(mod.net().param_count(), 0.0), fd(g.size());
    mod.backward(tape, u, g);
    for (std::size_t j = 0; j < g.size(); ++j) {
      const double p0 = mod.net().params()[j];
      mod.net().mutable_params()[j] = p0 + h;
      const double lp = u * mod.eval(err, t);
      mod.net().mutable_params()[j] = p0 - h;
      const double lm = u * mod.eval(err, t);
      mod.net().mutable_params()[j] = p0;
      fd[j] = (lp - lm) / (2 * h);
    }
    record(rel_err(g, fd));
  }

  const auto sched = NoiseSchedule::vp();
  for (std::size_t c = 0; c < o.gradient_cases - 2 * per_kind; ++c) {
    MicroNetSpec spec;
    spec.cond_dim = 2;
    spec.hidden = {8, 8};
    spec.n_freq = 2;
    MicroNet net(spec, 3000 + c);
    const double w = c % 2 ? 0.1 : 0.0;
    const auto grid = sched.make_grid(2 + c % 3, Spacing::UniformLambda, 0.6);
    const auto x0 = gaussians(rng, 2);
    const auto y = gaussians(rng, 2);
    std::vector<std::vector<double>> sg(grid.times.size());
    for (std::size_t i = 1; i < sg.size(); ++i) sg[i] = gaussians(rng, 2);
    auto loss = [&](std::span<const double> start) {
      const auto ro = rollout_forward(net, sched, grid.times, start, y, w, y);
      double l = 0.0;
      for (std::size_t i = 1; i < sg.size(); ++i) {
        for (std::size_t k = 0; k < 2; ++k) l += sg[i][k] * ro.states[i][k];
      }
      return l;
    };
    const auto ro = rollout_forward(net, sched, grid.times, x0, y, w, y);
    std::vector<double> gth(net.param_count(), 0.0), gs(2);
    rollout_backward(net, ro, sg, gth, gs);
    std::vector<double> fd_th(net.param_count()), fd_s(2);
    for (std::size_t j = 0; j < net.param_count(); ++j) {
      const double p0 = net.params()[j];
      net.mutable_params()[j] = p0 + h;
      const double lp = loss(x0);
      net.mutable_params()[j] = p0 - h;
      const double lm = loss(x0);
      net.mutable_params()[j] = p0;
      fd_th[j] = (lp - lm) / (2 * h);
    }
    for (std::size_t j = 0; j < 2; ++j) {
      auto xp = x0, xm = x0;
      xp[j] += h;
      xm[j] -= h;
      fd_s[j] = (loss(xp) - loss(xm)) / (2 * h);
    }
    record(std::max(rel_err(gth, fd_th), rel_err(gs, fd_s)));
  }
  return result("gradient_integrity", worst < 1e-4 && cases >= 20, worst, 1e-4,
                std::to_string(cases) + " cases (network, modulator, guided rollout), worst relative error " +
                    g6(worst));
}

CheckResult criterion_determinism(const CriteriaOptions& o) {
  namespace fs = std::filesystem;
  RunConfig cfg;
  cfg.seed = 71;
  cfg.sample.solver = SolverKind::MsdeVp;
  cfg.sample.gamma = 0.5;
  cfg.sample.steps = 50;
  cfg.sample.n = 2000;
  const fs::path root = fs::path(o.scratch_dir) / "determinism";
  auto run = [&](const std::string& name, std::size_t threads) {
    CommandEnv env;
    env.out_dir = (root / name).string();
    env.threads = threads;
    cmd_sample(cfg, SampleFlags{}, env);
    std::ifstream is(root / name / "trajectories.csv", std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
  };
  const auto a = run("threads1", 1);
  const auto b = run("threads8", 8);
  const auto c = run("threads1_again", 1);
  const bool same = !a.empty() && a == b && a == c;
  std::error_code ec;
  fs::remove_all(root, ec);
  return result("determinism", same, same ? 0.0 : 1.0, 0.0,
                std::to_string(a.size()) + " bytes; threads 1 vs 8 " + (a == b ? "identical" : "differ") +
                    ", repeat " + (a == c ? "identical" : "differ"));
}

std::vector<Check> acceptance_checks(const CriteriaOptions& o) {
  return {
      {"marginal_preservation", [o] { return criterion_marginal_preservation(o); }},
      {"exact_degenerations", [o] { return criterion_exact_degenerations(o); }},
      {"beta_asymptotic", [o] { return criterion_beta_asymptotic(o); }},
      {"rf_equivalence", [o] { return criterion_rf_equivalence(o); }},
      {"cost_trends", [o] { return criterion_cost_trends(o); }},
      {"alignment_efficacy", [o] { return criterion_alignment_efficacy(o); }},
      {"distillation_efficacy", [o] { return criterion_distillation_efficacy(o); }},
      {"interp_bound", [o] { return criterion_interp_bound(o); }},
      {"gradient_integrity", [o] { return criterion_gradient_integrity(o); }},
      {"determinism", [o] { return criterion_determinism(o); }},
  };
}

namespace {

CheckResult check_philox() {
  const auto a = philox4x32({0, 0, 0, 0}, {0, 0});
  const auto b = philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu});
  const auto c = philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u});
  const bool ok = a == std::array<std::uint32_t, 4>{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u} &&
                  b == std::array<std::uint32_t, 4>{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu} &&
                  c == std::array<std::uint32_t, 4>{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u};
  return result("rng.philox_known_answers", ok, ok ? 0 : 1, 0, "three Random123 test vectors");
}

CheckResult check_kernels() {
  const auto* avx = kernels::avx2_table();
  if (!avx) return result("kernels.avx2_matches_scalar", true, 0, 1e-12, "avx2 variant unavailable on this host");
  const auto& sc = kernels::scalar_table();
  RngCursor rng(81, 0, Draw::Misc);
  const std::size_t rows = 13, cols = 37;
  const auto w = gaussians(rng, rows * cols), x = gaussians(rng, cols), b = gaussians(rng, rows);
  std::vector<double> y1(rows), y2(rows);
  sc.gemv(w.data(), x.data(), b.data(), y1.data(), rows, cols);
  avx->gemv(w.data(), x.data(), b.data(), y2.data(), rows, cols);
  double worst = rel_err(y2, y1);
  const auto pa = gaussians(rng, 2 * 101), pb = gaussians(rng, 2 * 77);
  const double c1 = sc.cross_distance_sum(pa.data(), 101, pb.data(), 77, 2);
  const double c2 = avx->cross_distance_sum(pa.data(), 101, pb.data(), 77, 2);
  worst = std::max(worst, std::abs(c1 - c2) / std::abs(c1));
  return result("kernels.avx2_matches_scalar", worst < 1e-12, worst, 1e-12, "gemv and cross-distance relative error");
}

CheckResult check_score_identity() {
  const auto sched = NoiseSchedule::vp();
  const MixtureOracle mix(sched, {0.2, 0.5, 0.3}, {{1.0, -1.0}, {-2.0, 0.5}, {0.0, 2.0}}, {0.3, 0.6, 1.0});
  RngCursor rng(82, 0, Draw::Misc);
  double worst = 0.0;
  const double h = 1e-5;
  for (int c = 0; c < 100; ++c) {
    const double t = 0.05 + 0.9 * rng.uniform();
    const auto x = gaussians(rng, 2, 2.0);
    const auto e = mix.eps(x, t);
    std::vector<double> fd(2);
    const double s = sched.eval(t).sigma;
    for (std::size_t j = 0; j < 2; ++j) {
      auto xp = x, xm = x;
      xp[j] += h;
      xm[j] -= h;
      fd[j] = -s * (mix.log_density(xp, t) - mix.log_density(xm, t)) / (2 * h);
    }
    worst = std::max(worst, rel_err(e, fd));
  }
  return result("oracle.score_identity", worst < 1e-5, worst, 1e-5, "3-component mixture, 100 random (x, t)");
}

CheckResult check_eps_check_roundtrip() {
  RngCursor rng(83, 0, Draw::Misc);
  double worst = 0.0;
  for (const auto& sched : {NoiseSchedule::vp(), NoiseSchedule::ve()}) {
    for (int c = 0; c < 100; ++c) {
      const double t = 0.05 + 0.9 * rng.uniform();
      const double tp = t * rng.uniform();
      const double tpc = std::max(tp, sched.t_min());
      const auto x = gaussians(rng, 2), eps = gaussians(rng, 2);
      std::vector<double> xp(2), back(2);
      if (sched.kind() == ScheduleKind::VP) {
        dpm1_step(sched, x, t, tpc, eps, xp);
      } else {
        msde_ve_step(sched, x, t, tpc, eps, 0.0, eps, xp);
      }
      eps_check(sched, xp, x, tpc, t, back);
      worst = std::max(worst, rel_err(back, eps));
    }
  }
  return result("distill.eps_check_roundtrip", worst < 1e-10, worst, 1e-10, "VP and VE, 100 steps each");
}

CheckResult check_guidance_midpoint() {
  RngCursor rng(84, 0, Draw::Misc);
  double worst = 0.0;
  for (int c = 0; c < 100; ++c) {
    const auto e = gaussians(rng, 2), et = gaussians(rng, 2);
    const double w1 = rng.uniform(), w2 = rng.uniform();
    std::vector<double> a(2), b(2), m(2);
    guided_eps(e, et, w1, a);
    guided_eps(e, et, w2, b);
    guided_eps(e, et, 0.5 * (w1 + w2), m);
    for (std::size_t k = 0; k < 2; ++k) worst = std::max(worst, std::abs(a[k] + b[k] - 2 * m[k]));
  }
  return result("distill.guidance_affine", worst < 1e-12, worst, 1e-12, "midpoint identity over 100 draws");
}

CheckResult check_cost_self_inversion() {
  const auto sched = NoiseSchedule::vp();
  const GaussianOracle oracle(sched, {2.0, 2.0}, 1.0);
  const auto eps = oracle_fn(oracle);
  const auto grid = sched.make_grid(40, Spacing::UniformLambda);
  std::vector<double> z(2);
  const RngStream rng(85, 0);
  rng.gaussians(0, z, Draw::Start);
  const auto tr = integrate(sched, eps, grid.times, z, IntegrateOptions{}, rng);
  const auto rep = trajectory_cost(sched, tr, 40, eps);
  const double worst = *std::max_element(rep.per_step.begin(), rep.per_step.end());
  return result("distill.cost_self_inversion", worst < 1e-8, worst, 1e-8, "k = dense grid size, total " + g6(rep.total));
}

CheckResult check_config_roundtrip() {
  RunConfig c;
  c.seed = 12345;
  c.schedule.t_min = 0.1 / 3.0;
  c.distill.w = 1.0 / 7.0;
  c.oracle.mean = {std::nextafter(2.0, 3.0), -0.1};
  c.cost.k = {1, 3, 7};
  const bool ok = parse_config(serialize_config(c)) == c;
  bool rejects = false;
  try {
    parse_config("[sample]\nbogus = 1\n");
  } catch (const Error& e) {
    rejects = e.kind() == ErrorKind::Config;
  }
  return result("config.roundtrip", ok && rejects, ok && rejects ? 0 : 1, 0,
                std::string("round trip ") + (ok ? "lossless" : "lossy") + ", unknown key " +
                    (rejects ? "rejected" : "accepted"));
}

CheckResult check_checkpoint_roundtrip() {
  Checkpoint c;
  c.step = 42;
  c.config_text = serialize_config(RunConfig{});
  MicroNetSpec spec;
  spec.cond_dim = 2;
  c.oracle = MicroNet(spec, 86);
  c.modulator = GammaModulator(87).net();
  c.tags = {{"k", 1}, {"w", 0.1}, {"delta", 0.15}};
  const auto bytes = encode_checkpoint(c);
  const auto d = decode_checkpoint(bytes);
  bool ok = encode_checkpoint(d) == bytes && d.oracle->param_count() == c.oracle->param_count() &&
            std::memcmp(d.oracle->params().data(), c.oracle->params().data(), 8 * c.oracle->param_count()) == 0;
  auto truncated = bytes;
  truncated.resize(bytes.size() / 2);
  bool refuses = false;
  try {
    decode_checkpoint(truncated);
  } catch (const Error& e) {
    refuses = e.kind() == ErrorKind::Checkpoint;
  }
  ok = ok && refuses;
  return result("checkpoint.roundtrip", ok, ok ? 0 : 1, 0, "bitwise weights, truncated file refused");
}

CheckResult check_w_sweep(const CriteriaOptions& o) {
  CriteriaOptions small = o;
  small.pretrain_steps = std::min<std::size_t>(o.pretrain_steps, 1500);
  auto f = ring_fixture(500, small);
  std::string detail;
  bool finite = true;
  double best = INFINITY;
  for (double w : {0.0, 0.05, 0.1, 0.2}) {
    DistillConfig cfg;
    cfg.w = w;
    cfg.iterations = std::min<std::size_t>(o.distill_iterations, 300);
    cfg.seed = 501;
    MicroNet s = f.teacher;
    distill_train(s, f.teacher, f.sched, f.train, cfg);
    const double m = infer_mse(s, f.sched, f.test, cfg, 502);
    finite = finite && std::isfinite(m);
    best = std::min(best, m);
    detail += "w=" + g6(w) + ": mse " + g6(m) + "; ";
  }
  return result("distill.w_sweep", finite, best, INFINITY, detail + "k=1 with interpolation");
}

}  // namespace

std::vector<Check> property_suite(const CriteriaOptions& o) {
  std::vector<Check> v = {
      {"rng.philox_known_answers", check_philox},
      {"kernels.avx2_matches_scalar", check_kernels},
      {"oracle.score_identity", check_score_identity},
      {"distill.eps_check_roundtrip", check_eps_check_roundtrip},
      {"distill.guidance_affine", check_guidance_midpoint},
      {"distill.cost_self_inversion", check_cost_self_inversion},
      {"config.roundtrip", check_config_roundtrip},
      {"checkpoint.roundtrip", check_checkpoint_roundtrip},
      {"distill.w_sweep", [o] { return check_w_sweep(o); }},
  };
  for (auto& c : acceptance_checks(o)) v.push_back(std::move(c));
  return v;
}

std::vector<CheckResult> run_checks(std::span<const Check> checks, std::ostream* progress) {
  std::vector<CheckResult> out;
  for (const auto& c : checks) {
    const auto t0 = std::chrono::steady_clock::now();
    CheckResult r;
    try {
      r = c.run();
    } catch (const std::exception& e) {
      r = result(c.id, false, NAN, NAN, std::string("exception: ") + e.what());
    }
    r.id = c.id;
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (progress) {
      *progress << (r.passed ? "PASS " : "FAIL ") << r.id << "  value=" << g6(r.value)
                << " threshold=" << g6(r.threshold) << "  " << r.detail << "  [" << g6(secs) << " s]\n";
      progress->flush();
    }
    out.push_back(std::move(r));
  }
  return out;
}

void write_report(std::ostream& os, std::span<const CheckResult> results) {
  os << "id,status,value,threshold,detail\n";
  for (const auto& r : results) {
    std::string d = r.detail;
    std::replace(d.begin(), d.end(), '"', '\'');
    os << r.id << "," << (r.passed ? "pass" : "fail") << "," << g17(r.value) << "," << g17(r.threshold) << ",\"" << d
       << "\"\n";
  }
}

}  // namespace trajkit
