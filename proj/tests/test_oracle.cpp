#include <doctest.h>

#include <cmath>
#include <vector>

#include "trajkit/error.hpp"
#include "trajkit/oracle.hpp"
#include "trajkit/rng.hpp"

using namespace trajkit;

TEST_CASE("gaussian oracle matches the closed-form marginal") {
  const auto s = NoiseSchedule::vp();
  GaussianOracle o(s, {2.0, -1.0}, {1.0, 0.5});
  RngCursor rng(1, 0, Draw::Misc);
  for (int i = 0; i < 200; ++i) {
    const double t = s.t_min() + (s.t_max() - s.t_min()) * rng.uniform();
    const auto c = s.eval(t);
    std::vector<double> x{3 * rng.gaussian(), 3 * rng.gaussian()};
    const auto e = o.eps(x, t);
    const double mu[2] = {2.0, -1.0}, sc[2] = {1.0, 0.5};
    for (int k = 0; k < 2; ++k) {
      const double var = c.alpha * c.alpha * sc[k] * sc[k] + c.sigma * c.sigma;
      CHECK(e[k] == doctest::Approx(c.sigma * (x[k] - c.alpha * mu[k]) / var).epsilon(1e-12));
    }
  }
}

TEST_CASE("mixture eps equals -sigma times the finite-difference score") {
  for (const auto& s : {NoiseSchedule::vp(), NoiseSchedule::ve()}) {
    MixtureOracle o(s, {0.3, 0.7}, {{-1.0, 0.5}, {1.5, 1.0}}, {0.4, 0.6});
    RngCursor rng(2, 0, Draw::Misc);
    for (int i = 0; i < 100; ++i) {
      const double t = 0.05 + 0.9 * rng.uniform();
      const double sg = s.eval(t).sigma;
      std::vector<double> x{2 * rng.gaussian(), 2 * rng.gaussian()};
      const auto e = o.eps(x, t);
      for (int k = 0; k < 2; ++k) {
        const double h = 1e-5 * std::max(1.0, sg);
        auto xp = x, xm = x;
        xp[k] += h;
        xm[k] -= h;
        const double score = (o.log_density(xp, t) - o.log_density(xm, t)) / (2 * h);
        CHECK(e[k] == doctest::Approx(-sg * score).epsilon(1e-5).scale(1.0));
      }
    }
  }
}

TEST_CASE("single-component mixture reduces to the gaussian oracle") {
  const auto s = NoiseSchedule::vp();
  MixtureOracle m(s, {1.0}, {{2.0, 2.0}}, {1.0});
  GaussianOracle g(s, {2.0, 2.0}, 1.0);
  for (double t : {0.01, 0.3, 0.8, 1.0}) {
    std::vector<double> x{0.3, -4.0};
    const auto a = m.eps(x, t), b = g.eps(x, t);
    CHECK(a[0] == doctest::Approx(b[0]).epsilon(1e-13));
    CHECK(a[1] == doctest::Approx(b[1]).epsilon(1e-13));
  }
}

TEST_CASE("symmetric mixture has zero eps at the origin and stays finite far away") {
  const auto s = NoiseSchedule::vp();
  MixtureOracle m(s, {0.5, 0.5}, {{-1.0, 0.0}, {1.0, 0.0}}, {0.1, 0.1});
  const auto e = m.eps(std::vector<double>{0.0, 0.0}, 0.2);
  CHECK(std::abs(e[0]) < 1e-14);
  CHECK(std::abs(e[1]) < 1e-14);
  const auto far = m.eps(std::vector<double>{1e3, -1e3}, 0.01);
  CHECK(std::isfinite(far[0]));
  CHECK(std::isfinite(far[1]));
}

TEST_CASE("linear gaussian posterior has the textbook moments") {
  const auto s = NoiseSchedule::vp();
  const double prior = 1.5, a = 0.7, b = 0.2, n = 0.3;
  LinearGaussianPosteriorOracle o(s, {1.0, -1.0}, prior, {a, a}, {b, b}, n);
  const std::vector<double> y{0.4, -0.9};
  const double var = 1.0 / (1.0 / (prior * prior) + a * a / (n * n));
  const auto pm = o.posterior_mean(y);
  const double mu[2] = {1.0, -1.0};
  for (int k = 0; k < 2; ++k) {
    CHECK(pm[k] == doctest::Approx(var * (mu[k] / (prior * prior) + a * (y[k] - b) / (n * n))).epsilon(1e-13));
    CHECK(o.posterior_var()[k] == doctest::Approx(var).epsilon(1e-13));
  }
  GaussianOracle g(s, pm, std::sqrt(var));
  const std::vector<double> x{0.1, 0.2};
  const auto e1 = o.eps(x, 0.4, y), e2 = g.eps(x, 0.4);
  CHECK(e1[0] == doctest::Approx(e2[0]).epsilon(1e-12));
  CHECK(e1[1] == doctest::Approx(e2[1]).epsilon(1e-12));
}

TEST_CASE("rectified-flow gaussian velocity") {
  const std::vector<double> m{2.0, 2.0};
  const double sc = 0.5;
  for (double t : {0.01, 0.25, 0.5, 0.9, 1.0}) {
    const std::vector<double> x{1.0, -0.5};
    std::vector<double> v(2);
    rf_gaussian_velocity(m, sc, x, t, v);
    const double var = (1 - t) * (1 - t) * sc * sc + t * t;
    const double cv = t - (1 - t) * sc * sc;
    for (int k = 0; k < 2; ++k) {
      CHECK(v[k] == doctest::Approx(-m[k] + cv / var * (x[k] - (1 - t) * m[k])).epsilon(1e-13));
    }
  }
}

TEST_CASE("dimension checks") {
  GaussianOracle g(NoiseSchedule::vp(), {0.0, 0.0}, 1.0);
  std::vector<double> out(2);
  CHECK_THROWS_AS(g.eps(std::vector<double>{1.0}, 0.5, {}, out), Error);
  CHECK_THROWS_AS(g.eps(std::vector<double>{1.0, 2.0}, 2.0), Error);
}
