#include <doctest.h>

#include <cmath>
#include <vector>

#include "trajkit/kernels.hpp"
#include "trajkit/rng.hpp"

using namespace trajkit;

namespace {

std::vector<double> randn(std::size_t n, std::uint64_t stream) {
  std::vector<double> v(n);
  RngStream(7, stream).gaussians(0, v, Draw::Misc);
  return v;
}

void check_close(const std::vector<double>& a, const std::vector<double>& b, double tol) {
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::abs(a[i] - b[i]) <= tol * (1.0 + std::abs(b[i])));
}

}  // namespace

TEST_CASE("active table is one of the compiled variants") {
  const auto& act = kernels::active();
  const bool known = &act == &kernels::scalar_table() || &act == kernels::avx2_table();
  CHECK(known);
}

TEST_CASE("avx2 kernels agree with the scalar reference") {
  const auto* avx = kernels::avx2_table();
  if (!avx) {
    MESSAGE("avx2 variant unavailable, nothing to compare");
    return;
  }
  const auto& sc = kernels::scalar_table();
  for (std::size_t rows : {1u, 3u, 8u, 17u, 64u}) {
    for (std::size_t cols : {1u, 2u, 5u, 16u, 33u, 64u}) {
      CAPTURE(rows);
      CAPTURE(cols);
      const auto w = randn(rows * cols, 1), x = randn(cols, 2), b = randn(rows, 3), g = randn(rows, 4);

      CHECK(std::abs(sc.dot(x.data(), x.data(), cols) - avx->dot(x.data(), x.data(), cols)) < 1e-12 * cols);

      std::vector<double> y1(rows), y2(rows);
      sc.gemv(w.data(), x.data(), b.data(), y1.data(), rows, cols);
      avx->gemv(w.data(), x.data(), b.data(), y2.data(), rows, cols);
      check_close(y1, y2, 1e-12);
      sc.gemv(w.data(), x.data(), nullptr, y1.data(), rows, cols);
      avx->gemv(w.data(), x.data(), nullptr, y2.data(), rows, cols);
      check_close(y1, y2, 1e-12);

      std::vector<double> o1 = randn(cols, 5), o2 = o1;
      sc.gemv_t_acc(w.data(), g.data(), o1.data(), rows, cols);
      avx->gemv_t_acc(w.data(), g.data(), o2.data(), rows, cols);
      check_close(o1, o2, 1e-12);

      std::vector<double> w1 = w, w2 = w;
      sc.ger_acc(w1.data(), g.data(), x.data(), rows, cols);
      avx->ger_acc(w2.data(), g.data(), x.data(), rows, cols);
      check_close(w1, w2, 1e-12);
    }
  }
}

TEST_CASE("avx2 adam and distance kernels agree with the scalar reference") {
  const auto* avx = kernels::avx2_table();
  if (!avx) return;
  const auto& sc = kernels::scalar_table();
  for (std::size_t n : {1u, 4u, 7u, 130u}) {
    auto p1 = randn(n, 10), g = randn(n, 11);
    auto m1 = randn(n, 12), v1 = randn(n, 13);
    for (double& v : v1) v = v * v;
    auto p2 = p1, m2 = m1, v2 = v1;
    const kernels::AdamStep st{1e-3, 0.9, 0.999, 1e-8, 1 - 0.9 * 0.9, 1 - 0.999 * 0.999};
    sc.adam(p1.data(), g.data(), m1.data(), v1.data(), n, st);
    avx->adam(p2.data(), g.data(), m2.data(), v2.data(), n, st);
    check_close(p1, p2, 1e-13);
    check_close(m1, m2, 1e-13);
    check_close(v1, v2, 1e-13);
  }
  for (std::size_t dim : {1u, 2u, 3u}) {
    for (std::size_t na : {1u, 5u, 33u}) {
      const std::size_t nb = na + 3;
      const auto a = randn(na * dim, 20), b = randn(nb * dim, 21);
      const double c1 = sc.cross_distance_sum(a.data(), na, b.data(), nb, dim);
      const double c2 = avx->cross_distance_sum(a.data(), na, b.data(), nb, dim);
      CHECK(c2 == doctest::Approx(c1).epsilon(1e-12));
      const double s1 = sc.self_distance_sum(b.data(), nb, dim);
      const double s2 = avx->self_distance_sum(b.data(), nb, dim);
      CHECK(s2 == doctest::Approx(s1).epsilon(1e-12));
    }
  }
}

TEST_CASE("scalar distance sums match a direct loop") {
  const auto& sc = kernels::scalar_table();
  const std::size_t na = 6, nb = 4, dim = 2;
  const auto a = randn(na * dim, 30), b = randn(nb * dim, 31);
  double cross = 0.0, self = 0.0;
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < nb; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) s += std::pow(a[k * na + i] - b[k * nb + j], 2);
      cross += std::sqrt(s);
    }
    for (std::size_t j = i + 1; j < na; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < dim; ++k) s += std::pow(a[k * na + i] - a[k * na + j], 2);
      self += std::sqrt(s);
    }
  }
  CHECK(sc.cross_distance_sum(a.data(), na, b.data(), nb, dim) == doctest::Approx(cross).epsilon(1e-14));
  CHECK(sc.self_distance_sum(a.data(), na, dim) == doctest::Approx(self).epsilon(1e-14));
}
