#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "trajkit/rng.hpp"

namespace trajkit {

/// y = A x + b + noise_std * z.
struct DegradationOp {
  std::size_t dim = 2;
  std::vector<double> A;  // dim x dim, row-major
  std::vector<double> b;
  double noise_std = 0.0;

  static DegradationOp scaled(std::size_t dim, double a, double noise_std);
  void validate() const;
};

/// Applies the operator with an explicit noise vector (length dim).
void degrade(const DegradationOp& op, std::span<const double> x, std::span<const double> z,
             std::span<double> y);
std::vector<double> degrade(const DegradationOp& op, std::span<const double> x,
                            const RngStream& rng, std::uint32_t step);

enum class DatasetKind { GaussianShift, Ring, TwoMoons };

struct ToyDataset {
  DatasetKind kind = DatasetKind::Ring;
  std::uint64_t seed = 0;
  DegradationOp op;
  std::vector<std::vector<double>> x_star;
  std::vector<std::vector<double>> y;

  std::size_t size() const { return x_star.size(); }
  std::size_t dim() const { return op.dim; }
};

inline constexpr std::size_t kMaxTaskDim = 16;

/// Pair i draws from RngStream(seed, i): Draw::Data step 0 for the clean
/// sample, step 1 for the degradation noise.
ToyDataset gen_dataset(DatasetKind kind, std::size_t n, const DegradationOp& op,
                       std::uint64_t seed);
void draw_clean(DatasetKind kind, const RngStream& rng, std::span<double> x);

const char* to_string(DatasetKind kind) noexcept;
DatasetKind parse_dataset_kind(const std::string& s);

enum class RewardKind { NegMse, PsnrLike };
enum class DivergenceKind { SqL2, L1 };

struct RewardSpec {
  RewardKind kind = RewardKind::NegMse;
  double data_range = 2.0;
};

struct DivergenceSpec {
  DivergenceKind kind = DivergenceKind::SqL2;
};

double mse(std::span<const double> a, std::span<const double> b);
double reward(const RewardSpec& spec, std::span<const double> x_hat, std::span<const double> x_star);
double divergence(const DivergenceSpec& spec, std::span<const double> a, std::span<const double> b);

RewardKind parse_reward_kind(const std::string& s);
DivergenceKind parse_divergence_kind(const std::string& s);
const char* to_string(RewardKind kind) noexcept;
const char* to_string(DivergenceKind kind) noexcept;

void write_dataset(std::ostream& os, const ToyDataset& ds);
ToyDataset read_dataset(std::istream& is);

}  // namespace trajkit
