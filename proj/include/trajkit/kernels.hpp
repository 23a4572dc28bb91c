#pragma once

// Data-parallel inner loops. Every kernel has a scalar reference
// implementation; an AVX2+FMA variant is compiled on x86-64 and selected at
// runtime when the CPU supports it. TRAJKIT_KERNELS=scalar|avx2|auto
// overrides the choice. Variants agree to rounding, not bitwise.

#include <cstddef>
#include <span>

namespace trajkit::kernels {

struct AdamStep {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias1;  // 1 - beta1^step
  double bias2;  // 1 - beta2^step
};

struct KernelTable {
  const char* name;
  double (*dot)(const double* a, const double* b, std::size_t n);
  // y = W x + b, W row-major rows x cols. b may be null.
  void (*gemv)(const double* w, const double* x, const double* b, double* y, std::size_t rows,
               std::size_t cols);
  // out += W^T g
  void (*gemv_t_acc)(const double* w, const double* g, double* out, std::size_t rows,
                     std::size_t cols);
  // W += g x^T
  void (*ger_acc)(double* w, const double* g, const double* x, std::size_t rows, std::size_t cols);
  void (*adam)(double* p, const double* g, double* m, double* v, std::size_t n,
               const AdamStep& step);
  // Point sets are structure-of-arrays: coordinate k of point i at data[k * n + i].
  // Sum over all (i, j) of |a_i - b_j|.
  double (*cross_distance_sum)(const double* a, std::size_t na, const double* b, std::size_t nb,
                               std::size_t dim);
  // Sum over i < j of |a_i - a_j|.
  double (*self_distance_sum)(const double* a, std::size_t n, std::size_t dim);
};

const KernelTable& scalar_table();
/// Null when the variant was not compiled in or the CPU lacks AVX2/FMA.
const KernelTable* avx2_table();
/// The table every caller in the library goes through. Chosen once per process.
const KernelTable& active();

inline double dot(std::span<const double> a, std::span<const double> b) {
  return active().dot(a.data(), b.data(), a.size());
}

}  // namespace trajkit::kernels
