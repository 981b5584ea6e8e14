#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "safewalk/env/trajectory.hpp"
#include "safewalk/harness/checkpoint.hpp"

namespace safewalk::harness {

struct TaskEvaluation {
  std::string task;
  std::size_t episodes = 0;
  double mean_return = 0.0;        // scaled task reward per episode
  std::size_t falls = 0;
  double mean_displacement = 0.0;  // along the episode's initial heading, metres
  double mean_yaw_change = 0.0;    // radians, unwrapped
  double mean_steps = 0.0;

  bool operator==(const TaskEvaluation&) const = default;
};

struct EvaluationStats {
  std::vector<TaskEvaluation> tasks;
  bool operator==(const EvaluationStats&) const = default;
};

/// Deterministic rollouts (zero policy noise) of every task's policy in an open
/// field on the checkpoint's terrain. Each episode starts from rest at the
/// origin heading +x and lasts until a fall or the horizon.
EvaluationStats evaluate_policy(const Checkpoint& checkpoint, std::size_t episodes, std::uint64_t seed = 0);

/// Reference open-loop gait: full stride forward while sin(phase) >= 0, full
/// stride back otherwise, everything else neutral.
env::Action scripted_gait(const env::WalkerState& state);

/// The reference gait rolled out like evaluate_policy, scored on the first task
/// of the session's task set.
TaskEvaluation evaluate_scripted_gait(const tasks::SessionConfig& session, std::size_t episodes,
                                      std::uint64_t seed = 0);

/// Deterministic composed rollout following one task name per step.
std::vector<env::TrajectoryRecord> evaluate_commands(const Checkpoint& checkpoint,
                                                     const std::vector<std::string>& command_stream,
                                                     std::uint64_t seed = 0);

}  // namespace safewalk::harness
