#include <cmath>

#include "trajkit/kernels.hpp"

namespace trajkit::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void gemv_scalar(const double* w, const double* x, const double* b, double* y, std::size_t rows,
                 std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    y[r] = dot_scalar(w + r * cols, x, cols) + (b ? b[r] : 0.0);
  }
}

void gemv_t_acc_scalar(const double* w, const double* g, double* out, std::size_t rows,
                       std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    const double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) out[c] += gr * row[c];
  }
}

void ger_acc_scalar(double* w, const double* g, const double* x, std::size_t rows,
                    std::size_t cols) {
  for (std::size_t r = 0; r < rows; ++r) {
    const double gr = g[r];
    double* row = w + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += gr * x[c];
  }
}

void adam_scalar(double* p, const double* g, double* m, double* v, std::size_t n,
                 const AdamStep& s) {
  for (std::size_t i = 0; i < n; ++i) {
    m[i] = s.beta1 * m[i] + (1.0 - s.beta1) * g[i];
    v[i] = s.beta2 * v[i] + (1.0 - s.beta2) * g[i] * g[i];
    const double mhat = m[i] / s.bias1;
    const double vhat = v[i] / s.bias2;
    p[i] -= s.lr * mhat / (std::sqrt(vhat) + s.eps);
  }
}

double point_distance(const double* a, std::size_t na, std::size_t i, const double* b,
                      std::size_t nb, std::size_t j, std::size_t dim) {
  double d2 = 0.0;
  for (std::size_t k = 0; k < dim; ++k) {
    const double d = a[k * na + i] - b[k * nb + j];
    d2 += d * d;
  }
  return std::sqrt(d2);
}

double cross_distance_sum_scalar(const double* a, std::size_t na, const double* b, std::size_t nb,
                                 std::size_t dim) {
  double total = 0.0;
  for (std::size_t i = 0; i < na; ++i) {
    double row = 0.0;
    for (std::size_t j = 0; j < nb; ++j) row += point_distance(a, na, i, b, nb, j, dim);
    total += row;
  }
  return total;
}

double self_distance_sum_scalar(const double* a, std::size_t n, std::size_t dim) {
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double row = 0.0;
    for (std::size_t j = i + 1; j < n; ++j) row += point_distance(a, n, i, a, n, j, dim);
    total += row;
  }
  return total;
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      "scalar",         dot_scalar,   gemv_scalar,
      gemv_t_acc_scalar, ger_acc_scalar, adam_scalar,
      cross_distance_sum_scalar, self_distance_sum_scalar,
  };
  return table;
}

}  // namespace trajkit::kernels
