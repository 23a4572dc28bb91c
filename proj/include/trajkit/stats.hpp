#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace trajkit {

struct MeanCov {
  std::vector<double> mean;
  std::vector<double> cov;  // d x d row-major, unbiased
  std::size_t n = 0;
  std::size_t dim() const { return mean.size(); }
};

MeanCov mean_cov(std::span<const std::vector<double>> points);

/// ||A - B||_F / ||B||_F for row-major square matrices.
double frobenius_rel_error(std::span<const double> a, std::span<const double> b);

/// Point cloud in structure-of-arrays layout: coordinate k of point i at data[k * n + i].
struct PointCloud {
  std::size_t n = 0;
  std::size_t dim = 0;
  std::vector<double> data;

  static PointCloud from_points(std::span<const std::vector<double>> points);
};

/// Squared energy distance (V-statistic) 2 E|A-B| - E|A-A'| - E|B-B'|.
double energy_distance(const PointCloud& a, const PointCloud& b);

struct PermutationTest {
  double statistic = 0.0;
  double p_value = 1.0;
  std::size_t permutations = 0;
};

/// Permutation test of equal distributions on the energy statistic.
/// Permutations are parallel; each draws from RngCursor(seed, perm, Permute).
PermutationTest energy_permutation_test(const PointCloud& a, const PointCloud& b,
                                        std::size_t permutations, std::uint64_t seed);

struct PairedTTest {
  double mean_diff = 0.0;
  double t = 0.0;
  double p_value = 1.0;  // one-sided: mean(before - after) > 0
  std::size_t n = 0;
};

PairedTTest paired_t_test_greater(std::span<const double> before, std::span<const double> after);

}  // namespace trajkit
