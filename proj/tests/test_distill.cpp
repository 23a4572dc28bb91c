#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <sstream>
#include <vector>

#include "trajkit/distill.hpp"
#include "trajkit/error.hpp"
#include "trajkit/oracle.hpp"

using namespace trajkit;
using quad = boost::multiprecision::cpp_bin_float_quad;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Usage;
}

MicroNet small_net(std::uint64_t seed, std::size_t cond = 2) {
  MicroNetSpec s;
  s.cond_dim = cond;
  s.hidden = {16, 16};
  s.n_freq = 4;
  return MicroNet(s, seed);
}

}  // namespace

TEST_CASE("eps_tilde matches a quad-precision evaluation") {
  const auto s = NoiseSchedule::vp();
  const std::vector<double> x{0.4, -1.2}, y{0.9, 0.1};
  std::vector<double> out(2);
  for (double t : {1.0, 0.7, 0.3, 0.05}) {
    eps_tilde(s, x, t, y, out);
    const quad a0 = quad(s.eval(s.t_min()).alpha), s0 = quad(s.eval(s.t_min()).sigma);
    const quad at = quad(s.eval(t).alpha), st = quad(s.eval(t).sigma);
    const quad q = a0 / at;
    for (int i = 0; i < 2; ++i) {
      const quad ref = (q * quad(x[i]) - quad(y[i])) / (q * st - s0);
      CHECK(out[i] == doctest::Approx(static_cast<double>(ref)).epsilon(1e-13));
    }
  }
  CHECK(guidance_active(s, 0.5));
  CHECK_FALSE(guidance_active(s, s.t_min()));
  CHECK(kind_of([&] { eps_tilde(s, x, s.t_min(), y, out); }) == ErrorKind::Numeric);
}

TEST_CASE("guided eps is affine in w") {
  const std::vector<double> th{1.0, -2.0}, ti{0.5, 3.0};
  std::vector<double> out(2);
  guided_eps(th, ti, 0.0, out);
  CHECK(out == th);
  guided_eps(th, ti, 0.1, out);
  CHECK(out[0] == doctest::Approx(1.1 - 0.05));
  CHECK(out[1] == doctest::Approx(-2.2 - 0.3));
}

TEST_CASE("default delta is the largest grid offset below the SNR threshold") {
  const auto s = NoiseSchedule::vp();
  // log-SNR falls linearly by 20 over [t_min, 1], so offset j has log-SNR -10 + j/2.
  const std::size_t j = static_cast<std::size_t>(std::floor((std::log(1e-3) + 10.0) * 2.0));
  CHECK(j == 6);
  const double expected = double(j) * (1.0 - s.t_min()) / 40.0;
  CHECK(default_delta(s, 40, 1e-3) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(default_delta(s, 40, 1e-3) == doctest::Approx(0.14985).epsilon(1e-9));
  CHECK(snr(s, 1.0 - expected) < 1e-3);
  CHECK(snr(s, 1.0 - expected - (1.0 - s.t_min()) / 40.0) >= 1e-3);
}

TEST_CASE("interpolated start and its validation") {
  const auto s = NoiseSchedule::vp();
  const std::vector<double> y{1.0, 2.0}, z{0.5, -0.5};
  const double delta = 0.1;
  const auto c = s.eval(1.0 - delta);
  const auto x = interp_init(s, y, delta, z);
  CHECK(x[0] == doctest::Approx(c.alpha + 0.5 * c.sigma));
  CHECK(x[1] == doctest::Approx(2 * c.alpha - 0.5 * c.sigma));
  CHECK(kind_of([&] { interp_init(s, y, 0.9, z); }) == ErrorKind::Config);
}

TEST_CASE("eps_check recovers the noise of a dpm1 step") {
  for (const auto& s : {NoiseSchedule::vp(), NoiseSchedule::ve()}) {
    const std::vector<double> x{0.3, -0.8}, e{1.1, -0.4};
    std::vector<double> xp(2), chk(2), exp_(2);
    for (auto [t, tp] : {std::pair{1.0, 0.8}, {0.5, 0.45}, {0.2, 0.01}}) {
      dpm1_step(s, x, t, tp, e, xp);
      eps_check(s, xp, x, tp, t, chk);
      CHECK(chk[0] == doctest::Approx(e[0]).epsilon(1e-9));
      CHECK(chk[1] == doctest::Approx(e[1]).epsilon(1e-9));
      if (s.kind() == ScheduleKind::VP) {
        eps_check_expanded(s, xp, x, tp, t, exp_);
        CHECK(exp_[0] == doctest::Approx(chk[0]).epsilon(1e-8));
        CHECK(exp_[1] == doctest::Approx(chk[1]).epsilon(1e-8));
      }
    }
  }
}

TEST_CASE("ve eps_check telescopes to the total displacement") {
  const auto s = NoiseSchedule::ve();
  GaussianOracle o(s, {1.0, -1.0}, 0.5);
  const auto grid = s.make_grid(12, Spacing::UniformT);
  const auto tr = integrate(s, oracle_fn(o), grid.times, std::vector<double>{30.0, -20.0}, {}, RngStream(0, 0));
  std::vector<double> acc(2, 0.0), chk(2);
  for (std::size_t i = 0; i + 1 < tr.times.size(); ++i) {
    eps_check(s, tr.states[i + 1], tr.states[i], tr.times[i + 1], tr.times[i], chk);
    const double ds = s.eval(tr.times[i]).sigma - s.eval(tr.times[i + 1]).sigma;
    for (int k = 0; k < 2; ++k) acc[k] += ds * chk[k];
  }
  for (int k = 0; k < 2; ++k) CHECK(acc[k] == doctest::Approx(tr.states.front()[k] - tr.endpoint()[k]).epsilon(1e-10));
}

TEST_CASE("cost vanishes at full resolution and the report is well formed") {
  const auto s = NoiseSchedule::vp();
  GaussianOracle o(s, {2.0, 2.0}, 1.0);
  const auto grid = s.make_grid(40, Spacing::UniformLambda);
  const auto tr = integrate(s, oracle_fn(o), grid.times, std::vector<double>{0.3, 0.1}, {}, RngStream(0, 0));
  const auto full = trajectory_cost(s, tr, 40, oracle_fn(o));
  CHECK(full.total < 1e-6);
  const auto sparse = trajectory_cost(s, tr, 4, oracle_fn(o));
  CHECK(sparse.k == 4);
  CHECK(sparse.times.size() == 5);
  CHECK(sparse.per_step.size() == 4);
  CHECK(sparse.times.front() == tr.times.front());
  CHECK(sparse.times.back() == tr.times.back());
  CHECK(sparse.total > full.total);
  std::vector<CostReport> two{sparse, sparse};
  CHECK(average_cost(two).total == doctest::Approx(sparse.total));
  std::ostringstream os;
  write_cost_report(os, sparse);
  std::size_t lines = 0;
  for (char ch : os.str()) lines += ch == '\n';
  CHECK(lines == 5);
  CHECK_THROWS_AS(trajectory_cost(s, tr, 41, oracle_fn(o)), Error);
  CostReport r;
  r.per_step = {0.1, 0.5, 0.5};
  CHECK(r.argmax_step() == 1);
  CHECK_FALSE(r.first_step_dominant());
}

TEST_CASE("self-distillation is a fixed point") {
  const auto s = NoiseSchedule::vp();
  const auto data = gen_dataset(DatasetKind::Ring, 16, DegradationOp::scaled(2, 0.7, 0.05), 1);
  const MicroNet teacher = small_net(3);
  MicroNet student = teacher;
  DistillConfig cfg;
  cfg.k = 6;
  cfg.teacher_steps = 6;
  cfg.w = 0.0;
  cfg.interp = false;
  cfg.mix_ratio = 0.0;
  cfg.batch = 4;
  Distiller d(student, teacher, s, cfg);
  const auto r = d.step(data, 0);
  CHECK_FALSE(r.skipped);
  CHECK(r.loss < 1e-24);
  CHECK(std::equal(student.params().begin(), student.params().end(), teacher.params().begin()));
}

TEST_CASE("mix ratio one targets ground truth") {
  const auto s = NoiseSchedule::vp();
  const auto data = gen_dataset(DatasetKind::Ring, 8, DegradationOp::scaled(2, 0.7, 0.05), 2);
  const MicroNet teacher = small_net(4);
  MicroNet student = teacher;
  DistillConfig cfg;
  cfg.mix_ratio = 1.0;
  Distiller d(student, teacher, s, cfg);
  for (std::uint64_t st = 0; st < 20; ++st) {
    bool from_teacher = true;
    CHECK(d.target(data, st % 8, st, from_teacher) == data.x_star[st % 8]);
    CHECK_FALSE(from_teacher);
  }
  cfg.mix_ratio = 1.5;
  CHECK(kind_of([&] { Distiller(student, teacher, s, cfg); }) == ErrorKind::Config);
}

TEST_CASE("distillation improves the one-step student") {
  const auto s = NoiseSchedule::vp();
  const auto op = DegradationOp::scaled(2, 0.7, 0.05);
  const auto data = gen_dataset(DatasetKind::GaussianShift, 64, op, 5);
  const MicroNet teacher = small_net(6);
  MicroNet student = teacher;
  DistillConfig cfg;
  cfg.k = 1;
  cfg.interp = false;
  cfg.w = 0.0;
  cfg.iterations = 150;
  cfg.teacher_steps = 10;
  const double before = infer_mse(teacher, s, data, cfg, 9);
  const auto losses = distill_train(student, teacher, s, data, cfg);
  CHECK(losses.size() == 150);
  CHECK(infer_mse(student, s, data, cfg, 9) < before);
}

TEST_CASE("infer runs k steps from the configured start") {
  const auto s = NoiseSchedule::vp();
  const MicroNet net = small_net(7);
  DistillConfig cfg;
  cfg.k = 3;
  cfg.interp = true;
  const std::vector<double> y{0.5, 0.5}, z{1.0, -1.0};
  const auto r = infer(net, s, y, z, cfg);
  CHECK(r.trajectory.steps() == 3);
  CHECK(r.trajectory.times.front() == doctest::Approx(1.0 - resolve_delta(s, cfg)));
  CHECK(r.x0 == r.trajectory.endpoint());
  CHECK(student_start(s, cfg) == r.trajectory.times.front());
  cfg.interp = false;
  CHECK(student_start(s, cfg) == s.t_max());
}

TEST_CASE("interpolation error ratio is scale free and finite") {
  const auto s = NoiseSchedule::vp();
  const std::vector<double> x{1.0, 1.0}, y{0.7, 0.7}, z{0.2, -0.3};
  const double r = interp_error_ratio(s, x, y, z, 0.14985);
  CHECK(std::isfinite(r));
  CHECK(r > 0.0);
}
