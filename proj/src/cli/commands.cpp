#include "trajkit/commands.hpp"

#include <CLI11.hpp>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "trajkit/align.hpp"
#include "trajkit/checkpoint.hpp"
#include "trajkit/distill.hpp"
#include "trajkit/integrator.hpp"
#include "trajkit/oracle.hpp"
#include "trajkit/parallel.hpp"
#include "trajkit/stats.hpp"
#include "trajkit/trainer.hpp"
#include "trajkit/trajectory_io.hpp"
#include "trajkit/verify.hpp"

namespace trajkit {
namespace {

namespace fs = std::filesystem;

std::string g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::ostream& log_of(const CommandEnv& env) {
  static std::ostringstream sink;
  return env.log ? *env.log : sink;
}

fs::path prepare_out(const CommandEnv& env) {
  fs::path dir = env.out_dir.empty() ? fs::path("out") : fs::path(env.out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Artifact, "cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorKind::Artifact, "cannot write " + p.string());
  return os;
}

ToyDataset train_set(const RunConfig& cfg) {
  return gen_dataset(cfg.task.kind, cfg.task.n, to_degradation(cfg), cfg.seed);
}

ToyDataset test_set(const RunConfig& cfg) {
  return gen_dataset(cfg.task.kind, cfg.task.test_n, to_degradation(cfg), cfg.seed + 1000003);
}

std::string checkpoint_path(const RunConfig& cfg, const std::optional<std::string>& flag) {
  return flag ? *flag : cfg.oracle.checkpoint;
}

/// The oracle network from a checkpoint, or a freshly pre-trained one.
MicroNet base_network(const RunConfig& cfg, const std::string& path, const ToyDataset& train,
                      const NoiseSchedule& sched, std::optional<MicroNet>* modulator, std::uint64_t* step,
                      std::ostream& log) {
  if (!path.empty()) {
    if (!fs::exists(path)) fail(ErrorKind::Artifact, "checkpoint not found: " + path);
    auto ck = load_checkpoint(path);
    if (!ck.oracle) fail(ErrorKind::Checkpoint, "checkpoint has no oracle network: " + path);
    if (ck.oracle->spec().x_dim != cfg.task.dim) fail(ErrorKind::Checkpoint, "checkpoint dimension differs from task.dim");
    if (modulator) *modulator = ck.modulator;
    if (step) *step = ck.step;
    return *ck.oracle;
  }
  if (!cfg.oracle.pretrain) {
    fail(ErrorKind::Artifact, "no base checkpoint given and oracle.pretrain = false");
  }
  MicroNet net(oracle_net_spec(cfg), cfg.seed);
  const auto losses = train_denoiser(net, train, sched, to_train_config(cfg));
  if (!losses.empty()) log << "pretrained oracle: loss " << losses.front() << " -> " << losses.back() << "\n";
  if (step) *step = 0;
  return net;
}

std::span<const double> cond_for(const MicroNet& net, const std::vector<double>& y) {
  return net.spec().cond_dim ? std::span<const double>(y) : std::span<const double>();
}

}  // namespace

int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Config: return 2;
    case ErrorKind::Numeric: return 3;
    case ErrorKind::Artifact: return 4;
    case ErrorKind::Checkpoint: return 5;
    case ErrorKind::Usage: return 64;
    default: return 70;
  }
}

void cmd_sample(const RunConfig& cfg, const SampleFlags& flags, const CommandEnv& env) {
  const auto t0 = std::chrono::steady_clock::now();
  auto& log = log_of(env);
  const NoiseSchedule sched(cfg.schedule);
  SampleSection s = cfg.sample;
  try {
    if (flags.solver) s.solver = parse_solver_kind(*flags.solver);
  } catch (const Error& e) {
    fail(ErrorKind::Config, std::string("--solver: ") + e.what());
  }
  if (flags.steps) s.steps = *flags.steps;
  if (flags.n) s.n = *flags.n;
  if (flags.gamma) s.gamma = *flags.gamma;
  if (s.steps == 0 || s.n == 0) fail(ErrorKind::Config, "--steps and --n must be positive");
  if (s.gamma < 0.0) fail(ErrorKind::Config, "--gamma must be non-negative");
  if (!solver_compatible(s.solver, sched.kind())) {
    fail(ErrorKind::Config, std::string("solver ") + to_string(s.solver) + " does not run on schedule " +
                                to_string(sched.kind()));
  }

  const std::string ck = checkpoint_path(cfg, flags.checkpoint);
  std::optional<MicroNet> net;
  std::optional<GaussianOracle> gauss;
  ToyDataset conds;
  if (!ck.empty() || cfg.oracle.kind == "net") {
    if (ck.empty()) fail(ErrorKind::Artifact, "oracle.kind = net needs a checkpoint");
    net = base_network(cfg, ck, {}, sched, nullptr, nullptr, log);
    if (net->spec().cond_dim) conds = test_set(cfg);
  } else if (sched.kind() != ScheduleKind::RectFlow) {
    gauss.emplace(sched, cfg.oracle.mean, cfg.oracle.scale);
  }

  const auto grid = sched.make_grid(s.steps);
  const std::size_t d = cfg.task.dim;
  std::vector<Trajectory> trajs(s.n);
  parallel_for(
      s.n,
      [&](std::size_t i) {
        const RngStream rng(cfg.seed, i);
        std::vector<double> z(d);
        rng.gaussians(0, z, Draw::Start);
        EpsFn fn;
        if (net) {
          const std::vector<double> y = conds.size() ? conds.y[i % conds.size()] : std::vector<double>{};
          fn = [&net, y](std::span<const double> x, double t, std::size_t, std::span<double> out) {
            net->forward(x, t, cond_for(*net, y), out);
          };
        } else if (gauss) {
          fn = oracle_fn(*gauss);
        } else {
          fn = [&cfg](std::span<const double> x, double t, std::size_t, std::span<double> out) {
            rf_gaussian_velocity(cfg.oracle.mean, cfg.oracle.scale, x, t, out);
          };
        }
        IntegrateOptions opt;
        opt.solver = s.solver;
        opt.noise = s.noise;
        opt.gammas = {s.gamma};
        opt.alpha_mod = s.alpha_mod;
        trajs[i] = integrate(sched, fn, grid.times, z, opt, rng);
      },
      env.threads);

  const fs::path dir = prepare_out(env);
  {
    auto os = open_out(dir / "trajectories.csv");
    write_trajectories(os, trajs);
  }
  std::vector<std::vector<double>> ends;
  ends.reserve(trajs.size());
  for (const auto& tr : trajs) ends.push_back(tr.endpoint());
  const auto mc = mean_cov(ends);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  auto os = open_out(dir / "summary.txt");
  os << "solver = " << to_string(s.solver) << "\nsteps = " << s.steps << "\nn = " << s.n << "\ngamma = " << g17(s.gamma)
     << "\nendpoint_mean =";
  for (double m : mc.mean) os << " " << g17(m);
  os << "\nendpoint_cov =";
  for (double c : mc.cov) os << " " << g17(c);
  os << "\nwall_time_s = " << wall << "\n";
  log << "sampled " << s.n << " trajectories with " << to_string(s.solver) << " in " << wall << " s\n";
}

void cmd_align(const RunConfig& cfg, const TrainFlags& flags, const CommandEnv& env) {
  auto& log = log_of(env);
  const NoiseSchedule sched(cfg.schedule);
  if (sched.kind() != ScheduleKind::VP) fail(ErrorKind::Config, "align runs on the vp schedule");
  const auto train = train_set(cfg);
  const auto test = test_set(cfg);
  std::optional<MicroNet> mod_net;
  std::uint64_t step = 0;
  MicroNet theta = base_network(cfg, checkpoint_path(cfg, flags.checkpoint), train, sched, &mod_net, &step, log);
  GammaModulator psi = mod_net ? GammaModulator(*mod_net) : GammaModulator(cfg.seed + 1, cfg.align.mod_hidden);

  const auto acfg = to_align_config(cfg);
  const double pre = ode_endpoint_mse(theta, sched, test, acfg.steps, cfg.seed + 7);
  const auto rows = align_train(theta, psi, sched, train, acfg);
  const double post = ode_endpoint_mse(theta, sched, test, acfg.steps, cfg.seed + 7);
  log << "align: " << acfg.steps << "-step ODE endpoint MSE " << pre << " -> " << post << "\n";

  const fs::path dir = prepare_out(env);
  {
    auto os = open_out(dir / "align_metrics.csv");
    write_metrics(os, rows);
  }
  Checkpoint ck;
  ck.step = step + rows.size();
  ck.config_text = serialize_config(cfg);
  ck.schedule = cfg.schedule;
  ck.oracle = theta;
  ck.modulator = psi.net();
  ck.tags = {{"pre_mse", pre}, {"post_mse", post}};
  save_checkpoint((dir / "align.ckpt").string(), ck);
}

void cmd_distill(const RunConfig& cfg, const TrainFlags& flags, const CommandEnv& env) {
  auto& log = log_of(env);
  const NoiseSchedule sched(cfg.schedule);
  if (sched.kind() != ScheduleKind::VP) fail(ErrorKind::Config, "distill runs on the vp schedule");
  const auto train = train_set(cfg);
  const auto test = test_set(cfg);
  std::optional<MicroNet> mod_net;
  std::uint64_t step = 0;
  const MicroNet teacher = base_network(cfg, checkpoint_path(cfg, flags.checkpoint), train, sched, &mod_net, &step, log);
  auto dcfg = to_distill_config(cfg);
  if (flags.k) {
    if (*flags.k == 0) fail(ErrorKind::Config, "--k must be positive");
    dcfg.k = *flags.k;
  }
  const double delta = dcfg.interp ? resolve_delta(sched, dcfg) : 0.0;

  DistillConfig base = dcfg;
  base.interp = false;
  base.w = 0.0;
  const double before = infer_mse(teacher, sched, test, base, cfg.seed + 7);
  MicroNet student = teacher;
  const auto losses = distill_train(student, teacher, sched, train, dcfg);
  const double after = infer_mse(student, sched, test, dcfg, cfg.seed + 7);
  log << "distill: k=" << dcfg.k << " test MSE " << before << " (undistilled) -> " << after << "\n";

  const fs::path dir = prepare_out(env);
  {
    auto os = open_out(dir / "distill_metrics.csv");
    os << "iteration,loss\n";
    for (std::size_t i = 0; i < losses.size(); ++i) os << i << "," << g17(losses[i]) << "\n";
  }
  Checkpoint ck;
  ck.step = step + losses.size();
  ck.config_text = serialize_config(cfg);
  ck.schedule = cfg.schedule;
  ck.oracle = student;
  ck.modulator = mod_net;
  ck.tags = {{"k", static_cast<double>(dcfg.k)},
             {"w", dcfg.w},
             {"delta", delta},
             {"mse_undistilled", before},
             {"mse_distilled", after}};
  save_checkpoint((dir / "distill.ckpt").string(), ck);
}

void cmd_cost(const RunConfig& cfg, const CostFlags& flags, const CommandEnv& env) {
  auto& log = log_of(env);
  const NoiseSchedule sched(cfg.schedule);
  if (sched.kind() == ScheduleKind::RectFlow) fail(ErrorKind::Config, "cost needs a vp or ve schedule");
  const auto ks = flags.k ? *flags.k : cfg.cost.k;
  const std::size_t dense_steps = cfg.cost.dense_steps;
  for (auto k : ks) {
    if (k == 0 || k > dense_steps) fail(ErrorKind::Config, "--k entries must lie in [1, cost.dense_steps]");
  }
  const std::string ckpath = checkpoint_path(cfg, flags.checkpoint);
  std::optional<MicroNet> net;
  std::optional<GaussianOracle> gauss;
  ToyDataset conds;
  if (!ckpath.empty() || cfg.oracle.kind == "net") {
    if (ckpath.empty()) fail(ErrorKind::Artifact, "oracle.kind = net needs a checkpoint");
    net = base_network(cfg, ckpath, {}, sched, nullptr, nullptr, log);
    if (net->spec().cond_dim) conds = test_set(cfg);
  } else {
    gauss.emplace(sched, cfg.oracle.mean, cfg.oracle.scale);
  }
  auto eps_for = [&](std::size_t i) -> EpsFn {
    if (gauss) return oracle_fn(*gauss);
    const std::vector<double> y = conds.size() ? conds.y[i % conds.size()] : std::vector<double>{};
    return [&net, y](std::span<const double> x, double t, std::size_t, std::span<double> out) {
      net->forward(x, t, cond_for(*net, y), out);
    };
  };

  const auto grid = sched.make_grid(dense_steps);
  const std::size_t n = cfg.cost.n;
  std::vector<Trajectory> dense(n);
  parallel_for(
      n,
      [&](std::size_t i) {
        const RngStream rng(cfg.seed, i);
        std::vector<double> z(cfg.task.dim);
        rng.gaussians(0, z, Draw::Start);
        dense[i] = integrate(sched, eps_for(i), grid.times, z, IntegrateOptions{}, rng);
      },
      env.threads);

  const fs::path dir = prepare_out(env);
  auto summary = open_out(dir / "cost_summary.csv");
  summary << "k,total_cost,first_step_dominant\n";
  for (auto k : ks) {
    std::vector<CostReport> reps(n);
    parallel_for(n, [&](std::size_t i) { reps[i] = trajectory_cost(sched, dense[i], k, eps_for(i)); }, env.threads);
    const auto avg = average_cost(reps);
    auto os = open_out(dir / ("cost_k" + std::to_string(k) + ".csv"));
    write_cost_report(os, avg);
    summary << k << "," << g17(avg.total) << "," << (avg.first_step_dominant() ? 1 : 0) << "\n";
    log << "cost k=" << k << ": total " << avg.total << "\n";
  }
}

bool cmd_verify(const RunConfig& cfg, const CommandEnv& env) {
  CriteriaOptions o;
  const fs::path dir = prepare_out(env);
  o.scratch_dir = (dir / "scratch").string();
  (void)cfg;
  const auto checks = property_suite(o);
  const auto results = run_checks(checks, env.log);
  {
    auto os = open_out(dir / "verify_report.csv");
    write_report(os, results);
  }
  std::error_code ec;
  fs::remove_all(o.scratch_dir, ec);
  bool ok = true;
  std::string failed;
  for (const auto& r : results) {
    if (!r.passed) {
      ok = false;
      failed += " " + r.id;
    }
  }
  auto& log = log_of(env);
  log << results.size() << " checks, " << (ok ? "all passed" : "failed:" + failed) << "\n";
  return ok;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"trajkit: diffusion trajectory toolkit"};
  app.require_subcommand(1);
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "run configuration (INI)")->required();
    sub->add_option("--seed", seed, "override run.seed");
    sub->add_option("--out", out_dir, "output directory (default output.dir)");
  };

  SampleFlags sf;
  auto* sample = app.add_subcommand("sample", "integrate trajectories and dump them");
  common(sample);
  sample->add_option("--solver", sf.solver, "solver kind");
  sample->add_option("--steps", sf.steps, "number of solver steps");
  sample->add_option("--n", sf.n, "number of trajectories");
  sample->add_option("--gamma", sf.gamma, "constant M-SDE gamma");
  sample->add_option("--checkpoint", sf.checkpoint, "oracle checkpoint");

  TrainFlags af;
  auto* align = app.add_subcommand("align", "reinforce ODE trajectories with M-SDE candidates");
  common(align);
  align->add_option("--checkpoint", af.checkpoint, "base checkpoint");

  TrainFlags df;
  auto* distill = app.add_subcommand("distill", "distill a few-step student");
  common(distill);
  distill->add_option("--checkpoint", df.checkpoint, "teacher checkpoint");
  distill->add_option("--k", df.k, "student steps");

  CostFlags cf;
  std::vector<std::size_t> cost_k;
  auto* cost = app.add_subcommand("cost", "distillation cost per sparse step");
  common(cost);
  cost->add_option("--k", cost_k, "sparse step counts")->delimiter(',');
  cost->add_option("--checkpoint", cf.checkpoint, "oracle checkpoint");

  auto* verify = app.add_subcommand("verify", "run the property suite");
  common(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  try {
    RunConfig cfg = load_config(config_path);
    if (seed) cfg.seed = *seed;
    CommandEnv env;
    env.out_dir = out_dir.empty() ? cfg.output.dir : out_dir;
    env.log = &std::cerr;
    if (sample->parsed()) {
      cmd_sample(cfg, sf, env);
    } else if (align->parsed()) {
      cmd_align(cfg, af, env);
    } else if (distill->parsed()) {
      cmd_distill(cfg, df, env);
    } else if (cost->parsed()) {
      if (!cost_k.empty()) cf.k = cost_k;
      cmd_cost(cfg, cf, env);
    } else if (verify->parsed()) {
      env.log = &std::cout;
      return cmd_verify(cfg, env) ? 0 : 1;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.kind()) << "): " << e.what() << "\n";
    return exit_code(e.kind());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error (artifact): " << e.what() << "\n";
    return 4;
  }
  return 0;
}

}  // namespace trajkit
