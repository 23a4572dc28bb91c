// Compiled with -mavx2 -mfma. Only reached through avx2_table() after a
// runtime CPU check, so nothing here may be called unconditionally.

#include <immintrin.h>

#include <cmath>

#include "trajkit/kernels.hpp"

namespace trajkit::kernels::detail {
namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* a, const double* b, std::size_t n) {
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
    acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i + 4), _mm256_loadu_pd(b + i + 4), acc1);
  }
  for (; i + 4 <= n; i += 4) {
    acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(a + i), _mm256_loadu_pd(b + i), acc0);
  }
  double s = hsum(_mm256_add_pd(acc0, acc1));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void gemv_avx2(const double* w, const double* x, const double* b, double* y, std::size_t rows,
               std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = dot_avx2(w + r * cols, x, cols) + (b ? b[r] : 0.0);
  }
}

inline void axpy(double alpha, const double* x, double* y, std::size_t n) {
  const __m256d va = _mm256_set1_pd(alpha);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
  }
  for (; i < n; ++i) y[i] += alpha * x[i];
}

void gemv_t_acc_avx2(const double* w, const double* g, double* out, std::size_t rows,
                     std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy(g[r], w + r * cols, out, cols);
}

void ger_acc_avx2(double* w, const double* g, const double* x, std::size_t rows,
                  std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) axpy(g[r], x, w + r * cols, cols);
}

void adam_avx2(double* p, const double* g, double* m, double* v, std::size_t n,
               const AdamStep& s) {
  const __m256d b1 = _mm256_set1_pd(s.beta1);
  const __m256d b2 = _mm256_set1_pd(s.beta2);
  const __m256d c1 = _mm256_set1_pd(1.0 - s.beta1);
  const __m256d c2 = _mm256_set1_pd(1.0 - s.beta2);
  const __m256d inv_bias1 = _mm256_set1_pd(1.0 / s.bias1);
  const __m256d inv_bias2 = _mm256_set1_pd(1.0 / s.bias2);
  const __m256d lr = _mm256_set1_pd(s.lr);
  const __m256d eps = _mm256_set1_pd(s.eps);
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    const __m256d gi = _mm256_loadu_pd(g + i);
    const __m256d mi = _mm256_fmadd_pd(b1, _mm256_loadu_pd(m + i), _mm256_mul_pd(c1, gi));
    const __m256d vi =
        _mm256_fmadd_pd(b2, _mm256_loadu_pd(v + i), _mm256_mul_pd(c2, _mm256_mul_pd(gi, gi)));
    _mm256_storeu_pd(m + i, mi);
    _mm256_storeu_pd(v + i, vi);
    const __m256d denom = _mm256_add_pd(_mm256_sqrt_pd(_mm256_mul_pd(vi, inv_bias2)), eps);
    const __m256d upd = _mm256_div_pd(_mm256_mul_pd(lr, _mm256_mul_pd(mi, inv_bias1)), denom);
    _mm256_storeu_pd(p + i, _mm256_sub_pd(_mm256_loadu_pd(p + i), upd));
  }
  for (; i < n; ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
    p[i] -= s.lr * (m[i] / s.bias1) / (std::sqrt(v[i] / s.bias2) + s.eps);
  }
}

// Sum of |p - b_j| over j in [j0, nb), p given by its coordinates.
double row_distance_sum(const double* p, const double* b, std::size_t nb, std::size_t j0,
                        std::size_t dim) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t j = j0;
  for (; j + 4 <= nb; j += 4) {
    __m256d d2 = _mm256_setzero_pd();
    for (std::size_t k = 0; k < dim; ++k) {
      const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(b + k * nb + j), _mm256_set1_pd(p[k]));
      d2 = _mm256_fmadd_pd(d, d, d2);
    }
    acc = _mm256_add_pd(acc, _mm256_sqrt_pd(d2));
  }
  double s = hsum(acc);
  for (; j < nb; ++j) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < dim; ++k) {
      const double d = b[k * nb + j] - p[k];
      d2 += d * d;
    }
    s += std::sqrt(d2);
  }
  return s;
}

constexpr std::size_t kMaxDim = 64;

double cross_distance_sum_avx2(const double* a, std::size_t na, const double* b, std::size_t nb,
                               std::size_t dim) {
  double p[kMaxDim];
  double total = 0.0;
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t k = 0; k < dim; ++k) p[k] = a[k * na + i];
    total += row_distance_sum(p, b, nb, 0, dim);
  }
  return total;
}

double self_distance_sum_avx2(const double* a, std::size_t n, std::size_t dim) {
  double p[kMaxDim];
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    for (std::size_t k = 0; k < dim; ++k) p[k] = a[k * n + i];
    total += row_distance_sum(p, a, n, i + 1, dim);
  }
  return total;
}

}  // namespace

const KernelTable& avx2_table_impl() {
  static const KernelTable table{
      "avx2",          dot_avx2,   gemv_avx2,
      gemv_t_acc_avx2, ger_acc_avx2, adam_avx2,
      cross_distance_sum_avx2, self_distance_sum_avx2,
  };
  return table;
}

}  // namespace trajkit::kernels::detail
