#include <doctest.h>

#include <cmath>
#include <thread>
#include <vector>

#include "trajkit/rng.hpp"

using namespace trajkit;

TEST_CASE("philox4x32-10 known-answer vectors") {
  using A4 = std::array<std::uint32_t, 4>;
  CHECK(philox4x32({0, 0, 0, 0}, {0, 0}) == A4{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(philox4x32({0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}, {0xffffffffu, 0xffffffffu}) ==
        A4{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(philox4x32({0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}, {0xa4093822u, 0x299f31d0u}) ==
        A4{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("same key gives the same draws regardless of thread") {
  std::vector<double> a(17), b(17);
  RngStream(3, 9).gaussians(4, a);
  std::thread th([&] { RngStream(3, 9).gaussians(4, b); });
  th.join();
  CHECK(a == b);
}

TEST_CASE("different keys and draw kinds give different draws") {
  std::vector<double> a(4), b(4), c(4), d(4), e(4);
  RngStream(1, 2).gaussians(3, a, Draw::Step);
  RngStream(1, 2).gaussians(3, b, Draw::Start);
  RngStream(1, 3).gaussians(3, c, Draw::Step);
  RngStream(2, 2).gaussians(3, d, Draw::Step);
  RngStream(1, 2).gaussians(4, e, Draw::Step);
  CHECK(a != b);
  CHECK(a != c);
  CHECK(a != d);
  CHECK(a != e);
}

TEST_CASE("gaussian and uniform moments") {
  const std::size_t n = 100000;
  std::vector<double> g(n), u(n);
  RngStream(5, 0).gaussians(0, g);
  RngStream(5, 0).uniforms(0, u, Draw::Misc);
  double m = 0, v = 0, mu = 0;
  for (std::size_t i = 0; i < n; ++i) {
    m += g[i];
    v += g[i] * g[i];
    mu += u[i];
    CHECK_FALSE((u[i] <= 0.0 || u[i] >= 1.0));
  }
  m /= n;
  v = v / n - m * m;
  mu /= n;
  CHECK(std::abs(m) < 5.0 / std::sqrt(double(n)));
  CHECK(std::abs(v - 1.0) < 0.02);
  CHECK(std::abs(mu - 0.5) < 0.01);
}

TEST_CASE("gaussian prefix is stable when more values are requested") {
  std::vector<double> a(3), b(10);
  RngStream(8, 1).gaussians(2, a);
  RngStream(8, 1).gaussians(2, b);
  for (int i = 0; i < 3; ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("cursor advances and below() stays in range") {
  RngCursor c(4, 4, Draw::Batch);
  const double x = c.uniform();
  const double y = c.uniform();
  CHECK(x != y);
  CHECK(x == RngStream(4, 4).uniform(0, Draw::Batch));
  RngCursor d(4, 5, Draw::Batch);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto k = d.below(7);
    REQUIRE(k < 7);
    ++hits[k];
  }
  for (int h : hits) CHECK(h > 800);
}

TEST_CASE("oversized requests are refused") {
  std::vector<double> big(200000);
  CHECK_THROWS(RngStream(1, 1).gaussians(0, big));
}
