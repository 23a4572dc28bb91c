#include <doctest.h>

#include <cmath>

#include "trajkit/error.hpp"
#include "trajkit/rng.hpp"
#include "trajkit/schedule.hpp"

using namespace trajkit;

namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Usage;
}

}  // namespace

TEST_CASE("vp midpoint has alpha = sigma = 1/sqrt(2)") {
  const auto s = NoiseSchedule::vp();
  const double t_mid = 0.5 * (s.t_min() + s.t_max());
  const auto c = s.eval(t_mid);
  CHECK(c.lambda == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::abs(c.alpha - 0.7071067811865476) < 1e-15);
  CHECK(std::abs(c.sigma - 0.7071067811865476) < 1e-15);
  CHECK(s.time_at_lambda(0.0) == doctest::Approx(t_mid).epsilon(1e-14));
}

TEST_CASE("vp unit norm and monotone log-SNR at random times") {
  const auto s = NoiseSchedule::vp();
  RngCursor rng(1, 0, Draw::Misc);
  for (int i = 0; i < 1000; ++i) {
    const double t1 = s.t_min() + (s.t_max() - s.t_min()) * rng.uniform();
    const double t2 = s.t_min() + (s.t_max() - s.t_min()) * rng.uniform();
    const auto c = s.eval(t1);
    CHECK(std::abs(c.alpha * c.alpha + c.sigma * c.sigma - 1.0) < 1e-12);
    if (t1 < t2) CHECK(s.lambda(t1) > s.lambda(t2));
    if (t1 > t2) CHECK(s.lambda(t1) < s.lambda(t2));
  }
}

TEST_CASE("ve endpoint and diffusion closed forms") {
  const auto s = NoiseSchedule::ve();
  const auto c = s.eval(0.0);
  CHECK(c.alpha == 1.0);
  CHECK(c.sigma == doctest::Approx(0.01).epsilon(1e-15));
  CHECK(c.lambda == doctest::Approx(std::log(100.0)).epsilon(1e-14));
  const auto dd = s.drift_diffusion(0.0);
  CHECK(dd.f_coeff == 0.0);
  CHECK(dd.g_sq == doctest::Approx(2 * 0.01 * 0.01 * std::log(5000.0)).epsilon(1e-13));
  for (double t : {0.1, 0.5, 0.9}) {
    const double sg = s.eval(t).sigma;
    CHECK(s.drift_diffusion(t).g_sq == doctest::Approx(2 * sg * sg * std::log(5000.0)).epsilon(1e-13));
    CHECK(s.eval(t + 1e-3).sigma > sg);
  }
}

TEST_CASE("drift and diffusion agree with finite differences") {
  RngCursor rng(2, 0, Draw::Misc);
  for (const auto& s : {NoiseSchedule::vp(), NoiseSchedule::ve()}) {
    for (int i = 0; i < 100; ++i) {
      const double t = 0.01 + 0.98 * rng.uniform();
      const double h = 1e-6;
      const double dlog_a = (std::log(s.eval(t + h).alpha) - std::log(s.eval(t - h).alpha)) / (2 * h);
      const double ds2 = (std::pow(s.eval(t + h).sigma, 2) - std::pow(s.eval(t - h).sigma, 2)) / (2 * h);
      const double sg = s.eval(t).sigma;
      const auto dd = s.drift_diffusion(t);
      const double g2 = ds2 - 2 * dlog_a * sg * sg;
      if (s.kind() == ScheduleKind::VP) {
        CHECK(dd.f_coeff == doctest::Approx(dlog_a).epsilon(1e-6));
      } else {
        CHECK(dd.f_coeff == 0.0);
      }
      CHECK(dd.g_sq == doctest::Approx(g2).epsilon(1e-6));
    }
  }
}

TEST_CASE("rectified flow coefficients and unsupported drift") {
  const auto s = NoiseSchedule::rect_flow();
  const auto c = s.eval(0.3);
  CHECK(c.alpha == doctest::Approx(0.7));
  CHECK(c.sigma == doctest::Approx(0.3));
  CHECK(kind_of([&] { s.drift_diffusion(0.3); }) == ErrorKind::Unsupported);
  CHECK(kind_of([&] { s.make_grid(4, Spacing::UniformLambda); }) == ErrorKind::Unsupported);
}

TEST_CASE("grids") {
  const auto s = NoiseSchedule::vp();
  const auto g1 = s.make_grid(1, Spacing::UniformT);
  REQUIRE(g1.times.size() == 2);
  CHECK(g1.times[0] == s.t_max());
  CHECK(g1.times[1] == s.t_min());

  const auto g4 = s.make_grid(4, Spacing::UniformT);
  for (std::size_t i = 0; i + 1 < g4.times.size(); ++i) {
    CHECK(g4.times[i] - g4.times[i + 1] == doctest::Approx(0.24975).epsilon(1e-12));
  }

  const auto g40 = s.make_grid(40, Spacing::UniformLambda);
  CHECK(g40.steps() == 40);
  for (std::size_t i = 0; i + 1 < g40.times.size(); ++i) {
    CHECK(s.lambda(g40.times[i + 1]) - s.lambda(g40.times[i]) == doctest::Approx(0.5).epsilon(1e-10));
  }

  const auto gs = s.make_grid(5, Spacing::UniformLambda, 0.6);
  CHECK(gs.times.front() == 0.6);
  CHECK(gs.times.back() == s.t_min());

  CHECK(kind_of([&] { s.make_grid(0, Spacing::UniformT); }) == ErrorKind::Argument);
}

TEST_CASE("domain and parameter errors") {
  const auto s = NoiseSchedule::vp();
  CHECK(kind_of([&] { s.eval(1.5); }) == ErrorKind::Domain);
  CHECK(kind_of([&] { s.eval(-0.1); }) == ErrorKind::Domain);
  ScheduleParams bad;
  bad.t_min = 0.5;
  bad.t_max = 0.2;
  CHECK(kind_of([&] { NoiseSchedule{bad}; }) == ErrorKind::Argument);
  bad = ScheduleParams{};
  bad.t_min = 0.0;
  CHECK(kind_of([&] { NoiseSchedule{bad}; }) == ErrorKind::Argument);
}

TEST_CASE("string round trips") {
  for (auto k : {ScheduleKind::VP, ScheduleKind::VE, ScheduleKind::RectFlow}) CHECK(parse_schedule_kind(to_string(k)) == k);
  for (auto k : {Spacing::UniformT, Spacing::UniformLambda}) CHECK(parse_spacing(to_string(k)) == k);
}
