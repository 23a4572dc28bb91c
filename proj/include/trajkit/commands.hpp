#pragma once

#include <cstddef>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "trajkit/config.hpp"
#include "trajkit/error.hpp"

namespace trajkit {

struct CommandEnv {
  std::string out_dir;
  /// Worker cap for the command's own parallel loops; 0 defers to TRAJKIT_THREADS.
  std::size_t threads = 0;
  std::ostream* log = nullptr;
};

struct SampleFlags {
  std::optional<std::string> solver;
  std::optional<std::size_t> steps;
  std::optional<std::size_t> n;
  std::optional<double> gamma;
  std::optional<std::string> checkpoint;
};

struct TrainFlags {
  std::optional<std::string> checkpoint;
  std::optional<std::size_t> k;
};

struct CostFlags {
  std::optional<std::vector<std::size_t>> k;
  std::optional<std::string> checkpoint;
};

// Each command writes into env.out_dir (created if missing) and throws Error on failure.

/// trajectories.csv and summary.txt.
void cmd_sample(const RunConfig& cfg, const SampleFlags& flags, const CommandEnv& env);
/// align.ckpt and align_metrics.csv.
void cmd_align(const RunConfig& cfg, const TrainFlags& flags, const CommandEnv& env);
/// distill.ckpt and distill_metrics.csv.
void cmd_distill(const RunConfig& cfg, const TrainFlags& flags, const CommandEnv& env);
/// cost_k<k>.csv per k and cost_summary.csv.
void cmd_cost(const RunConfig& cfg, const CostFlags& flags, const CommandEnv& env);
/// verify_report.csv; returns false when any property fails.
bool cmd_verify(const RunConfig& cfg, const CommandEnv& env);

int exit_code(ErrorKind kind) noexcept;

/// Full command-line entry point; returns the process exit code.
int run_cli(int argc, char** argv);

}  // namespace trajkit
