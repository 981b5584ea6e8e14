#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "safewalk/approx/policy.hpp"
#include "safewalk/env/trajectory.hpp"
#include "safewalk/env/walker.hpp"
#include "safewalk/tasks/task.hpp"

namespace safewalk::tasks {

struct ControllerSettings {
  env::Terrain terrain = env::Terrain::flat();
  env::Workspace workspace = env::Workspace::large();
  env::Dynamics dynamics;
  std::uint64_t seed = 0;
  double reward_scale = 1.0;
};

/// Runs one deterministic policy per task on a single walker and switches
/// between them on command. Falls and escapes teleport back to the center.
class ComposedController {
 public:
  /// One policy per task, in task-set order.
  ComposedController(TaskSet tasks, std::vector<approx::GaussianPolicyHead> policies,
                     ControllerSettings settings);

  /// Executes one step of the named task's policy. Throws ContractViolation for
  /// names outside the task set.
  env::TrajectoryRecord step(const std::string& task_name);

  /// Teleports to the workspace center, heading +x.
  void reset();

  const env::WalkerState& walker() const { return walker_; }
  const TaskSet& tasks() const { return tasks_; }
  const ControllerSettings& settings() const { return settings_; }
  std::size_t fall_count() const { return falls_; }
  std::uint64_t steps() const { return t_; }

 private:
  TaskSet tasks_;
  std::vector<approx::GaussianPolicyHead> policies_;
  ControllerSettings settings_;
  std::mt19937_64 rng_;
  env::WalkerState walker_;
  env::ObservationHistory history_;
  EpisodeFrame frame_;
  std::size_t active_ = 0;
  bool has_active_ = false;
  std::size_t falls_ = 0;
  std::uint64_t t_ = 0;
};

/// Executes the command stream (one task name per step) from the workspace center.
std::vector<env::TrajectoryRecord> compose_controller(
    const TaskSet& tasks, const std::vector<approx::GaussianPolicyHead>& policies,
    const std::vector<std::string>& command_stream, const ControllerSettings& settings);

}  // namespace safewalk::tasks
