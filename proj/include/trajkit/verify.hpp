#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace trajkit {

struct CheckResult {
  std::string id;
  bool passed = false;
  double value = 0.0;
  double threshold = 0.0;
  std::string detail;
};

struct Check {
  std::string id;
  std::function<CheckResult()> run;
};

/// Sizes used by the acceptance criteria. Defaults are the full-size runs.
struct CriteriaOptions {
  std::size_t marginal_trajectories = 50000;
  std::size_t marginal_steps = 200;
  std::size_t degeneration_cases = 1000;
  std::size_t rf_samples = 10000;  // per cloud
  std::size_t rf_steps = 200;
  std::size_t rf_permutations = 199;
  std::size_t cost_trajectories = 256;
  std::size_t seeds = 5;
  std::size_t pretrain_steps = 3000;
  std::size_t align_iterations = 2000;
  std::size_t distill_iterations = 1500;
  std::size_t task_n = 512;
  std::size_t test_n = 256;
  std::size_t probe_samples = 1000;
  std::size_t gradient_cases = 24;
  std::string scratch_dir = "trajkit_scratch";
};

CheckResult criterion_marginal_preservation(const CriteriaOptions& o);
CheckResult criterion_exact_degenerations(const CriteriaOptions& o);
CheckResult criterion_beta_asymptotic(const CriteriaOptions& o);
CheckResult criterion_rf_equivalence(const CriteriaOptions& o);
CheckResult criterion_cost_trends(const CriteriaOptions& o);
CheckResult criterion_alignment_efficacy(const CriteriaOptions& o);
CheckResult criterion_distillation_efficacy(const CriteriaOptions& o);
CheckResult criterion_interp_bound(const CriteriaOptions& o);
CheckResult criterion_gradient_integrity(const CriteriaOptions& o);
CheckResult criterion_determinism(const CriteriaOptions& o);

/// The ten acceptance criteria in order.
std::vector<Check> acceptance_checks(const CriteriaOptions& o);
/// Structural properties followed by the acceptance criteria.
std::vector<Check> property_suite(const CriteriaOptions& o);

/// Runs each check, turning exceptions into failures.
std::vector<CheckResult> run_checks(std::span<const Check> checks, std::ostream* progress = nullptr);

/// CSV id,status,value,threshold,detail.
void write_report(std::ostream& os, std::span<const CheckResult> results);

}  // namespace trajkit
