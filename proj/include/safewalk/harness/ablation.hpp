#pragma once

// Seeded ablation runners. Every (setting, seed) pair is an independent job;
// jobs fan out over OpenMP threads, write their own per-run CSV, and are
// merged in job order afterwards, so results do not depend on scheduling.

#include <string>
#include <vector>

#include "safewalk/harness/config.hpp"
#include "safewalk/harness/csv.hpp"
#include "safewalk/tasks/session.hpp"

namespace safewalk::harness {

struct AblationJob {
  std::string label;  // setting name, shared by all seeds of one setting
  std::string workspace;
  std::string scheduler;
  std::string safety;
  tasks::SessionConfig session;
};

struct JobResult {
  AblationJob job;
  tasks::SessionCounters counters;
  std::vector<tasks::RunRecord> records;
};

struct AblationResult {
  std::vector<JobResult> runs;
  std::vector<SummaryRow> summary;

  /// Per-seed values of one metric for one setting label, in seed order.
  std::vector<double> values(const std::string& label, const std::string& metric) const;
};

/// Fraction of the step budget, counted from the end, that defines "final" return.
inline constexpr double kFinalFraction = 0.2;

/// Mean episode return over the episodes that finish within the last fraction
/// of the run's steps. Zero when no episode qualifies.
double final_return(const std::vector<tasks::RunRecord>& records, double fraction = kFinalFraction);

/// Runs all jobs; when out_dir is non-empty writes out_dir/runs/<label>_seed<k>.csv.
std::vector<JobResult> run_jobs(const std::vector<AblationJob>& jobs, const std::string& out_dir);

/// Per-setting summary rows for falls, out_of_workspace, final_return, sim_time and steps.
std::vector<SummaryRow> summarize(const std::string& ablation, const std::vector<JobResult>& runs);

/// Writes curves.csv and summary.csv into out_dir.
void write_outputs(const std::string& out_dir, const AblationResult& result);

/// Out-of-workspace ablation: workspaces {5.0x2.0, 2.0x1.4, 1.2x0.8} x schedulers
/// {center two-task, single_task}, flat terrain, every configured seed.
AblationResult run_ablation_oob(const ExperimentConfig& config, const std::string& out_dir);

/// Safety ablation: {lagrangian, fixed_weight 0, 1, 100} x seeds on flat terrain.
AblationResult run_ablation_safety(const ExperimentConfig& config, const std::string& out_dir);

/// Labels used by the runners.
std::string oob_label(const env::Workspace& workspace, tasks::SchedulerMode scheduler);
std::vector<tasks::SafetyMode> safety_modes();

}  // namespace safewalk::harness
