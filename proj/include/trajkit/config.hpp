#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "trajkit/align.hpp"
#include "trajkit/distill.hpp"
#include "trajkit/schedule.hpp"
#include "trajkit/task.hpp"
#include "trajkit/trainer.hpp"

namespace trajkit {

// Run configuration: INI text with the sections below. Every key is optional;
// unknown sections or keys are rejected. Lists are comma separated.

struct OracleSection {
  std::string kind = "gaussian";  // gaussian | net
  std::vector<double> mean{2.0, 2.0};
  double scale = 1.0;
  std::vector<std::size_t> hidden{64, 64};
  std::size_t n_freq = 8;
  bool conditional = true;
  bool pretrain = true;
  std::size_t train_steps = 3000;
  std::size_t train_batch = 64;
  double lr = 1e-3;
  std::string checkpoint;

  bool operator==(const OracleSection&) const = default;
};

struct TaskSection {
  DatasetKind kind = DatasetKind::Ring;
  std::size_t n = 512;
  std::size_t test_n = 256;
  std::size_t dim = 2;
  double scale = 0.7;
  double noise_std = 0.05;

  bool operator==(const TaskSection&) const = default;
};

struct SampleSection {
  SolverKind solver = SolverKind::Dpm1;
  std::size_t steps = 10;
  std::size_t n = 1000;
  double gamma = 0.0;
  NoiseCoefficient noise = NoiseCoefficient::Exact;
  double alpha_mod = 1.0;

  bool operator==(const SampleSection&) const = default;
};

struct AlignSection {
  std::size_t n_candidates = 8;
  RewardKind reward = RewardKind::NegMse;
  double data_range = 2.0;
  DivergenceKind divergence = DivergenceKind::SqL2;
  std::size_t iterations = 2000;
  std::size_t steps = 10;
  double anchor_weight = 1.0;
  double gamma_explore = 0.5;
  double gamma_max = 2.0;
  double lr = 5e-5;
  double mod_lr = 1e-3;
  std::vector<std::size_t> mod_hidden{32, 32};
  NoiseCoefficient noise = NoiseCoefficient::Exact;
  std::size_t max_skips = 10;

  bool operator==(const AlignSection&) const = default;
};

struct DistillSection {
  std::size_t k = 1;
  double delta = -1.0;
  double w = 0.1;
  bool interp = true;
  std::size_t teacher_steps = 40;
  double mix_ratio = 0.5;
  double snr_threshold = 1e-3;
  std::size_t iterations = 1500;
  std::size_t batch = 16;
  double lr = 1e-3;
  std::size_t max_skips = 10;

  bool operator==(const DistillSection&) const = default;
};

struct CostSection {
  std::vector<std::size_t> k{1, 2, 4, 5, 8, 10};
  std::size_t dense_steps = 40;
  std::size_t n = 256;

  bool operator==(const CostSection&) const = default;
};

struct OutputSection {
  std::string dir = "out";

  bool operator==(const OutputSection&) const = default;
};

struct RunConfig {
  std::uint64_t seed = 0;
  ScheduleParams schedule{};
  OracleSection oracle{};
  TaskSection task{};
  SampleSection sample{};
  AlignSection align{};
  DistillSection distill{};
  CostSection cost{};
  OutputSection output{};

  bool operator==(const RunConfig&) const = default;
};

/// Config-kind errors name the line and key at fault.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
/// Full dump of every key; floats at 17 significant digits.
std::string serialize_config(const RunConfig& cfg);

AlignConfig to_align_config(const RunConfig& cfg);
DistillConfig to_distill_config(const RunConfig& cfg);
TrainConfig to_train_config(const RunConfig& cfg);
DegradationOp to_degradation(const RunConfig& cfg);
MicroNetSpec oracle_net_spec(const RunConfig& cfg);

}  // namespace trajkit
