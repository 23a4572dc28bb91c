#include <doctest.h>

#include <boost/multiprecision/cpp_bin_float.hpp>
#include <cmath>
#include <thread>
#include <vector>

#include "trajkit/error.hpp"
#include "trajkit/integrator.hpp"
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

// Exact probability-flow map for N(mu, s^2) data between two times.
double exact_flow(const NoiseSchedule& sched, double mu, double s, double x, double t, double t_prev) {
  const auto a = sched.eval(t), b = sched.eval(t_prev);
  const double sd_t = std::sqrt(a.alpha * a.alpha * s * s + a.sigma * a.sigma);
  const double sd_p = std::sqrt(b.alpha * b.alpha * s * s + b.sigma * b.sigma);
  return b.alpha * mu + sd_p / sd_t * (x - a.alpha * mu);
}

}  // namespace

TEST_CASE("m-sde with gamma zero reduces to dpm1") {
  const auto vp = NoiseSchedule::vp();
  const auto ve = NoiseSchedule::ve();
  const std::vector<double> x{0.3, -1.7}, e{0.9, 0.2}, z{5.0, -5.0};
  std::vector<double> a(2), b(2);
  for (double t : {1.0, 0.6, 0.2}) {
    dpm1_step(vp, x, t, t - 0.1, e, a);
    msde_vp_step(vp, x, t, t - 0.1, e, 0.0, z, b);
    CHECK(a == b);
    dpm1_step(ve, x, t, t - 0.1, e, a);
    msde_ve_step(ve, x, t, t - 0.1, e, 0.0, z, b);
    CHECK(a == b);
  }
}

TEST_CASE("ddpm step matches a quad-precision evaluation of the textbook update") {
  const auto s = NoiseSchedule::vp();
  const std::vector<double> x{0.7, -2.1}, e{-0.4, 1.3}, z{0.25, -0.6};
  std::vector<double> out(2);
  for (auto [t, tp] : {std::pair{1.0, 0.95}, {0.5, 0.45}, {0.1, 0.05}, {0.6, 0.001}}) {
    ddpm_step(s, x, t, tp, e, z, out);
    const quad at = quad(s.eval(t).alpha), ap = quad(s.eval(tp).alpha);
    const quad abar_t = at * at, abar_p = ap * ap;
    const quad a = abar_t / abar_p, beta = 1 - a;
    for (int i = 0; i < 2; ++i) {
      const quad ref = (quad(x[i]) - beta / sqrt(1 - abar_t) * quad(e[i])) / sqrt(a) +
                       sqrt(beta * (1 - abar_p) / (1 - abar_t)) * quad(z[i]);
      CHECK(out[i] == doctest::Approx(static_cast<double>(ref)).epsilon(1e-12));
    }
  }
}

TEST_CASE("dpm1 is first order against the exact gaussian flow") {
  const auto s = NoiseSchedule::vp();
  const double mu = 2.0, sd = 0.5;
  GaussianOracle o(s, {mu}, sd);
  auto err = [&](std::size_t n) {
    const auto grid = s.make_grid(n, Spacing::UniformLambda);
    const std::vector<double> x0{0.8};
    const auto tr = integrate(s, oracle_fn(o), grid.times, x0, {}, RngStream(0, 0));
    return std::abs(tr.endpoint()[0] - exact_flow(s, mu, sd, x0[0], grid.times.front(), grid.times.back()));
  };
  const double e1 = err(100), e2 = err(200), e3 = err(400);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.15));
  CHECK(e2 / e3 == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("m-sde preserves gaussian marginals on a fine grid") {
  const auto s = NoiseSchedule::vp();
  GaussianOracle o(s, {2.0, 2.0}, 1.0);
  const auto grid = s.make_grid(50, Spacing::UniformLambda);
  const std::size_t n = 4000;
  double m = 0, v = 0;
  IntegrateOptions opt;
  opt.solver = SolverKind::MsdeVp;
  opt.gammas = {0.7};
  for (std::size_t i = 0; i < n; ++i) {
    RngStream rng(11, i);
    std::vector<double> x(2);
    rng.gaussians(0, x, Draw::Start);
    const auto tr = integrate(s, oracle_fn(o), grid.times, x, opt, rng);
    m += tr.endpoint()[0];
    v += tr.endpoint()[0] * tr.endpoint()[0];
  }
  m /= n;
  v = v / n - m * m;
  const auto c = s.eval(s.t_min());
  CHECK(std::abs(m - 2.0 * c.alpha) < 5.0 / std::sqrt(double(n)));
  CHECK(v == doctest::Approx(c.alpha * c.alpha + c.sigma * c.sigma).epsilon(0.1));
}

TEST_CASE("integrate records the trajectory and per-step gammas") {
  const auto s = NoiseSchedule::vp();
  GaussianOracle o(s, {0.0}, 1.0);
  const auto grid = s.make_grid(5, Spacing::UniformT);
  IntegrateOptions opt;
  opt.solver = SolverKind::MsdeVp;
  opt.gamma_fn = [](std::size_t step, double, std::span<const double>, std::span<const double>) {
    return 0.1 * double(step);
  };
  const auto tr = integrate(s, oracle_fn(o), grid.times, std::vector<double>{1.0}, opt, RngStream(1, 2));
  CHECK(tr.steps() == 5);
  CHECK(tr.states.size() == 6);
  REQUIRE(tr.gammas.size() == 5);
  CHECK(tr.gammas[3] == doctest::Approx(0.3));
  CHECK(tr.seed == 1);
  CHECK(tr.stream == 2);

  const auto det = integrate(s, oracle_fn(o), grid.times, std::vector<double>{1.0}, {}, RngStream(1, 2));
  CHECK(det.gammas.empty());
}

TEST_CASE("integration is identical across threads") {
  const auto s = NoiseSchedule::vp();
  GaussianOracle o(s, {2.0, 2.0}, 1.0);
  const auto grid = s.make_grid(30, Spacing::UniformLambda);
  IntegrateOptions opt;
  opt.solver = SolverKind::MsdeVp;
  opt.gammas = {0.5};
  const std::vector<double> x{0.1, 0.2};
  const auto a = integrate(s, oracle_fn(o), grid.times, x, opt, RngStream(4, 4));
  Trajectory b;
  std::thread th([&] { b = integrate(s, oracle_fn(o), grid.times, x, opt, RngStream(4, 4)); });
  th.join();
  CHECK(a.states == b.states);
}

TEST_CASE("forward diffusion") {
  const auto s = NoiseSchedule::vp();
  const auto c = s.eval(0.4);
  const auto x = forward_diffuse(s, std::vector<double>{1.0, 2.0}, 0.4, std::vector<double>{0.5, -0.5});
  CHECK(x[0] == doctest::Approx(c.alpha + 0.5 * c.sigma));
  CHECK(x[1] == doctest::Approx(2 * c.alpha - 0.5 * c.sigma));
}

TEST_CASE("rectified flow steps") {
  const std::vector<double> x{1.0, -1.0}, v{0.5, 2.0}, z{0.3, 0.3};
  std::vector<double> a(2), b(2);
  rf_ode_step(x, 0.5, 0.4, v, a);
  CHECK(a[0] == doctest::Approx(1.0 - 0.1 * 0.5));
  CHECK(a[1] == doctest::Approx(-1.0 - 0.1 * 2.0));
  rf_sde_step(x, 0.5, 0.1, v, 1.0, z, b);
  CHECK(a == b);
  CHECK(rf_sde_beta(0.5, 0.1, 1.0) == 0.0);
  for (double am : {1.5, 2.0, 3.0}) {
    const double dt = 1e-5;
    CHECK(rf_sde_beta(0.5, dt, am) / std::sqrt(dt) == doctest::Approx(std::sqrt(2 * (am - 1))).epsilon(1e-3));
  }
  CHECK(kind_of([] { rf_sde_beta(0.5, 0.1, 0.5); }) == ErrorKind::Argument);
  CHECK(kind_of([] { rf_sde_beta(0.5, 0.4, 2.0); }) == ErrorKind::Numeric);
}

TEST_CASE("noise coefficients") {
  const auto s = NoiseSchedule::vp();
  const auto ct = s.eval(0.5), cp = s.eval(0.4);
  const double lg = std::log(cp.alpha / ct.alpha);
  CHECK(msde_noise_std(s, 0.5, 0.4, NoiseCoefficient::Log) == doctest::Approx(cp.alpha * std::sqrt(lg)));
  CHECK(msde_noise_std(s, 0.5, 0.4, NoiseCoefficient::Sqrt2Log) ==
        doctest::Approx(std::sqrt(2.0) * cp.alpha * std::sqrt(lg)));
  const double r = cp.alpha / ct.alpha;
  CHECK(msde_noise_std(s, 0.5, 0.4, NoiseCoefficient::Exact) ==
        doctest::Approx(std::sqrt(r * r * ct.sigma * ct.sigma - cp.sigma * cp.sigma)));
  for (auto c : {NoiseCoefficient::Sqrt2Log, NoiseCoefficient::Log, NoiseCoefficient::Exact}) {
    CHECK(parse_noise_coefficient(to_string(c)) == c);
  }
}

TEST_CASE("argument errors") {
  const auto vp = NoiseSchedule::vp();
  const auto ve = NoiseSchedule::ve();
  const std::vector<double> x{1.0}, e{1.0}, z{1.0};
  std::vector<double> out(1);
  CHECK(kind_of([&] { msde_vp_step(ve, x, 0.5, 0.4, e, 0.5, z, out); }) == ErrorKind::Unsupported);
  CHECK(kind_of([&] { ddpm_step(ve, x, 0.5, 0.4, e, z, out); }) == ErrorKind::Unsupported);
  CHECK_THROWS_AS(msde_vp_step(vp, x, 0.5, 0.4, e, -1.0, z, out), Error);
  CHECK_THROWS_AS(dpm1_step(vp, x, 0.4, 0.5, e, out), Error);
  CHECK_THROWS_AS(dpm1_step(vp, x, 0.5, 0.4, std::vector<double>{1.0, 2.0}, out), Error);
  CHECK_FALSE(solver_compatible(SolverKind::MsdeVe, ScheduleKind::VP));
  CHECK(solver_compatible(SolverKind::RfSde, ScheduleKind::RectFlow));
  CHECK(solver_is_stochastic(SolverKind::DdpmAncestral));
  CHECK_FALSE(solver_is_stochastic(SolverKind::Dpm1));
  CHECK(parse_solver_kind("msde_vp") == SolverKind::MsdeVp);
}
