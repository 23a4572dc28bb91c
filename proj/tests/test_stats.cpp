#include <doctest.h>

#include <cmath>
#include <vector>

#include "trajkit/rng.hpp"
#include "trajkit/stats.hpp"

using namespace trajkit;

namespace {

std::vector<std::vector<double>> cloud(std::size_t n, double shift, std::uint64_t seed) {
  std::vector<std::vector<double>> pts(n, std::vector<double>(2));
  for (std::size_t i = 0; i < n; ++i) {
    RngStream(seed, i).gaussians(0, pts[i], Draw::Misc);
    pts[i][0] += shift;
  }
  return pts;
}

}  // namespace

TEST_CASE("mean and unbiased covariance") {
  const std::vector<std::vector<double>> pts{{0, 0}, {2, 0}, {0, 2}, {2, 2}};
  const auto mc = mean_cov(pts);
  CHECK(mc.n == 4);
  CHECK(mc.mean == std::vector<double>{1.0, 1.0});
  CHECK(mc.cov[0] == doctest::Approx(4.0 / 3.0));
  CHECK(mc.cov[1] == doctest::Approx(0.0));
  CHECK(mc.cov[3] == doctest::Approx(4.0 / 3.0));
  const std::vector<double> id{1, 0, 0, 1}, near{1.1, 0, 0, 1};
  CHECK(frobenius_rel_error(near, id) == doctest::Approx(0.1 / std::sqrt(2.0)));
}

TEST_CASE("energy distance of a small example") {
  const std::vector<std::vector<double>> a{{0.0}, {1.0}}, b{{3.0}, {3.0}};
  // 2 * mean(3, 2) - mean(0, 1, 1, 0) - 0
  CHECK(energy_distance(PointCloud::from_points(a), PointCloud::from_points(b)) == doctest::Approx(4.5));
}

TEST_CASE("energy permutation test separates shifted clouds") {
  const auto a = PointCloud::from_points(cloud(300, 0.0, 1));
  const auto same = PointCloud::from_points(cloud(300, 0.0, 2));
  const auto moved = PointCloud::from_points(cloud(300, 0.5, 3));
  const auto r_same = energy_permutation_test(a, same, 99, 4);
  const auto r_moved = energy_permutation_test(a, moved, 99, 4);
  CHECK(r_same.p_value > 0.05);
  CHECK(r_moved.p_value <= 0.01);
  CHECK(r_moved.permutations == 99);
  CHECK(energy_permutation_test(a, moved, 99, 4).p_value == r_moved.p_value);
}

TEST_CASE("paired one-sided t-test") {
  const std::vector<double> before{2, 4, 6, 8, 10}, after{1, 2, 3, 4, 5};
  const auto r = paired_t_test_greater(before, after);
  // differences 1..5: mean 3, sd sqrt(2.5), t = 3 / sqrt(0.5)
  const double t = 3.0 / std::sqrt(0.5);
  CHECK(r.t == doctest::Approx(t));
  CHECK(r.mean_diff == doctest::Approx(3.0));
  // Student t CDF with 4 degrees of freedom in closed form.
  const double u = t / std::sqrt(4.0 + t * t);
  const double cdf = 0.5 + 0.75 * u - 0.25 * u * u * u;
  CHECK(r.p_value == doctest::Approx(1.0 - cdf).epsilon(1e-9));
  const auto rev = paired_t_test_greater(after, before);
  CHECK(rev.p_value == doctest::Approx(cdf).epsilon(1e-9));
}
