#include "trajkit/stats.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <cmath>
#include <numeric>

#include "trajkit/error.hpp"
#include "trajkit/kernels.hpp"
#include "trajkit/parallel.hpp"
#include "trajkit/rng.hpp"

namespace trajkit {

MeanCov mean_cov(std::span<const std::vector<double>> points) {
  if (points.size() < 2) fail(ErrorKind::Argument, "mean_cov: need at least two points");
  const std::size_t d = points[0].size();
  MeanCov mc;
  mc.n = points.size();
  mc.mean.assign(d, 0.0);
  mc.cov.assign(d * d, 0.0);
  for (const auto& p : points) {
    for (std::size_t i = 0; i < d; ++i) mc.mean[i] += p[i];
  }
  for (double& m : mc.mean) m /= static_cast<double>(mc.n);
  for (const auto& p : points) {
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < d; ++j) mc.cov[i * d + j] += (p[i] - mc.mean[i]) * (p[j] - mc.mean[j]);
    }
  }
  for (double& c : mc.cov) c /= static_cast<double>(mc.n - 1);
  return mc;
}

double frobenius_rel_error(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) fail(ErrorKind::Argument, "frobenius_rel_error: size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

PointCloud PointCloud::from_points(std::span<const std::vector<double>> points) {
  PointCloud pc;
  pc.n = points.size();
  pc.dim = points.empty() ? 0 : points[0].size();
  pc.data.resize(pc.n * pc.dim);
  for (std::size_t i = 0; i < pc.n; ++i) {
    for (std::size_t k = 0; k < pc.dim; ++k) pc.data[k * pc.n + i] = points[i][k];
  }
  return pc;
}

namespace {

void check_clouds(const PointCloud& a, const PointCloud& b) {
  if (a.dim != b.dim || a.n < 2 || b.n < 2) fail(ErrorKind::Argument, "energy distance: need two clouds of equal dimension");
}

double energy_from_sums(double s_ab, double s_aa, double s_bb, std::size_t n, std::size_t m) {
  const auto dn = static_cast<double>(n), dm = static_cast<double>(m);
  return 2.0 * s_ab / (dn * dm) - 2.0 * s_aa / (dn * dn) - 2.0 * s_bb / (dm * dm);
}

}  // namespace

double energy_distance(const PointCloud& a, const PointCloud& b) {
  check_clouds(a, b);
  const auto& K = kernels::active();
  const double s_ab = K.cross_distance_sum(a.data.data(), a.n, b.data.data(), b.n, a.dim);
  const double s_aa = K.self_distance_sum(a.data.data(), a.n, a.dim);
  const double s_bb = K.self_distance_sum(b.data.data(), b.n, b.dim);
  return energy_from_sums(s_ab, s_aa, s_bb, a.n, b.n);
}

PermutationTest energy_permutation_test(const PointCloud& a, const PointCloud& b,
                                        std::size_t permutations, std::uint64_t seed) {
  check_clouds(a, b);
  const auto& K = kernels::active();
  const std::size_t n = a.n, m = b.n, N = n + m, d = a.dim;
  PointCloud pooled;
  pooled.n = N;
  pooled.dim = d;
  pooled.data.resize(N * d);
  for (std::size_t k = 0; k < d; ++k) {
    std::copy_n(a.data.begin() + static_cast<std::ptrdiff_t>(k * n), n, pooled.data.begin() + static_cast<std::ptrdiff_t>(k * N));
    std::copy_n(b.data.begin() + static_cast<std::ptrdiff_t>(k * m), m, pooled.data.begin() + static_cast<std::ptrdiff_t>(k * N + n));
  }
  // Sum over all unordered pairs is permutation invariant, so S_AB = S_all - S_AA - S_BB.
  const double s_all = K.self_distance_sum(pooled.data.data(), N, d);
  auto stat_for = [&](const PointCloud& x, const PointCloud& y) {
    const double s_aa = K.self_distance_sum(x.data.data(), x.n, d);
    const double s_bb = K.self_distance_sum(y.data.data(), y.n, d);
    return energy_from_sums(s_all - s_aa - s_bb, s_aa, s_bb, x.n, y.n);
  };
  PermutationTest res;
  res.permutations = permutations;
  res.statistic = stat_for(a, b);
  std::vector<double> perm_stats(permutations);
  parallel_for(permutations, [&](std::size_t p) {
    std::vector<std::size_t> idx(N);
    std::iota(idx.begin(), idx.end(), 0);
    RngCursor cur(seed, p, Draw::Permute);
    for (std::size_t i = N - 1; i > 0; --i) std::swap(idx[i], idx[cur.below(i + 1)]);
    PointCloud x, y;
    x.n = n, x.dim = d, x.data.resize(n * d);
    y.n = m, y.dim = d, y.data.resize(m * d);
    for (std::size_t k = 0; k < d; ++k) {
      for (std::size_t i = 0; i < n; ++i) x.data[k * n + i] = pooled.data[k * N + idx[i]];
      for (std::size_t i = 0; i < m; ++i) y.data[k * m + i] = pooled.data[k * N + idx[n + i]];
    }
    perm_stats[p] = stat_for(x, y);
  });
  std::size_t ge = 0;
  for (double s : perm_stats) ge += s >= res.statistic;
  res.p_value = static_cast<double>(1 + ge) / static_cast<double>(1 + permutations);
  return res;
}

PairedTTest paired_t_test_greater(std::span<const double> before, std::span<const double> after) {
  if (before.size() != after.size() || before.size() < 2) {
    fail(ErrorKind::Argument, "paired t-test: need two equal-length samples of size >= 2");
  }
  const std::size_t n = before.size();
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) mean += before[i] - after[i];
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = before[i] - after[i] - mean;
    ss += r * r;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  PairedTTest res;
  res.n = n;
  res.mean_diff = mean;
  if (sd == 0.0) {
    res.t = mean > 0.0 ? INFINITY : (mean < 0.0 ? -INFINITY : 0.0);
    res.p_value = mean > 0.0 ? 0.0 : (mean < 0.0 ? 1.0 : 0.5);
    return res;
  }
  res.t = mean / (sd / std::sqrt(static_cast<double>(n)));
  const boost::math::students_t dist(static_cast<double>(n - 1));
  res.p_value = boost::math::cdf(boost::math::complement(dist, res.t));
  return res;
}

}  // namespace trajkit
