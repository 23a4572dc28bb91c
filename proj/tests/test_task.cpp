#include <doctest.h>

#include <cmath>
#include <sstream>

#include "trajkit/error.hpp"
#include "trajkit/task.hpp"

using namespace trajkit;

TEST_CASE("degradation is affine in x") {
  DegradationOp op;
  op.dim = 2;
  op.A = {0.5, 0.2, -0.1, 0.9};
  op.b = {0.3, -0.4};
  op.noise_std = 0.1;
  const std::vector<double> x1{1.0, 2.0}, x2{-0.5, 0.7}, z{0.3, -1.2};
  std::vector<double> y1(2), y2(2);
  degrade(op, x1, z, y1);
  degrade(op, x2, z, y2);
  CHECK(y1[0] - y2[0] == doctest::Approx(0.5 * 1.5 + 0.2 * 1.3));
  CHECK(y1[1] - y2[1] == doctest::Approx(-0.1 * 1.5 + 0.9 * 1.3));
  CHECK(y1[0] == doctest::Approx(0.5 + 0.4 + 0.3 + 0.03));
}

TEST_CASE("degradation noise has the configured variance") {
  const auto op = DegradationOp::scaled(2, 0.7, 0.05);
  const std::vector<double> x{1.0, 1.0};
  double m = 0, v = 0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const auto y = degrade(op, x, RngStream(3, i), 1);
    const double r = y[0] - 0.7;
    m += r;
    v += r * r;
  }
  m /= n;
  v = v / n - m * m;
  CHECK(std::abs(m) < 0.002);
  CHECK(v == doctest::Approx(0.0025).epsilon(0.05));
}

TEST_CASE("ring samples lie near the unit circle") {
  const auto ds = gen_dataset(DatasetKind::Ring, 5000, DegradationOp::scaled(2, 0.7, 0.05), 9);
  std::size_t inside = 0;
  for (const auto& x : ds.x_star) {
    const double r = std::hypot(x[0], x[1]);
    inside += (r >= 0.8 && r <= 1.2);
  }
  CHECK(inside >= 0.99 * ds.size());
}

TEST_CASE("gaussian shift is centred at (2, 2)") {
  const auto ds = gen_dataset(DatasetKind::GaussianShift, 8000, DegradationOp::scaled(2, 1.0, 0.0), 2);
  double m0 = 0, m1 = 0;
  for (const auto& x : ds.x_star) {
    m0 += x[0];
    m1 += x[1];
  }
  CHECK(m0 / ds.size() == doctest::Approx(2.0).epsilon(0.03));
  CHECK(m1 / ds.size() == doctest::Approx(2.0).epsilon(0.03));
}

TEST_CASE("datasets are deterministic and round-trip through text") {
  const auto op = DegradationOp::scaled(2, 0.7, 0.05);
  CHECK(gen_dataset(DatasetKind::TwoMoons, 1, op, 4).size() == 1);
  const auto a = gen_dataset(DatasetKind::TwoMoons, 50, op, 4);
  const auto b = gen_dataset(DatasetKind::TwoMoons, 50, op, 4);
  CHECK(a.x_star == b.x_star);
  CHECK(a.y == b.y);
  std::stringstream ss;
  write_dataset(ss, a);
  const auto c = read_dataset(ss);
  CHECK(c.x_star == a.x_star);
  CHECK(c.y == a.y);
  CHECK(c.kind == a.kind);
  CHECK(c.seed == a.seed);
}

TEST_CASE("ring rejects other dimensions") {
  CHECK_THROWS_AS(gen_dataset(DatasetKind::Ring, 3, DegradationOp::scaled(3, 1.0, 0.0), 1), Error);
}

TEST_CASE("rewards and divergences") {
  const std::vector<double> a{1.0, 2.0}, b{1.1, 1.9};
  CHECK(mse(a, b) == doctest::Approx(0.01));
  CHECK(reward({RewardKind::NegMse}, a, b) == doctest::Approx(-0.01));
  CHECK(reward({RewardKind::PsnrLike, 2.0}, a, b) == doctest::Approx(10 * std::log10(400.0)));
  CHECK(divergence({DivergenceKind::SqL2}, a, b) == doctest::Approx(0.02));
  CHECK(divergence({DivergenceKind::L1}, a, b) == doctest::Approx(0.2));

  const std::vector<double> c{0.5, 2.5}, sh{7.0, -3.0};
  auto shift = [&](std::vector<double> v) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] += sh[i];
    return v;
  };
  for (auto k : {RewardKind::NegMse, RewardKind::PsnrLike}) {
    const bool before = reward({k}, a, b) > reward({k}, c, b);
    const bool after = reward({k}, shift(a), shift(b)) > reward({k}, shift(c), shift(b));
    CHECK(before == after);
  }
  CHECK_THROWS_AS(divergence({}, a, std::vector<double>{1.0}), Error);
  CHECK(parse_reward_kind("psnr_like") == RewardKind::PsnrLike);
  CHECK(parse_divergence_kind("l1") == DivergenceKind::L1);
  CHECK(parse_dataset_kind("two_moons") == DatasetKind::TwoMoons);
}
