#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "safewalk/env/walker.hpp"

namespace safewalk::tasks {

/// Walking direction weights: planar displacement (w1, w2) in the episode frame
/// and yaw change (w3).
struct TaskVector {
  double w1 = 0.0;
  double w2 = 0.0;
  double w3 = 0.0;
  std::string name;

  TaskVector counter() const;
  /// Heading the task drives toward in the robot frame; turn tasks map to +-90 deg.
  double bearing() const;
  bool operator==(const TaskVector&) const = default;
};

class TaskSet {
 public:
  TaskSet() = default;
  /// Throws ContractViolation unless every task is nonzero and has its counter in the set.
  TaskSet(std::string name, std::vector<TaskVector> tasks);

  static TaskSet two_task();
  static TaskSet four_task();
  static TaskSet by_name(const std::string& name);

  const std::string& name() const { return name_; }
  const std::vector<TaskVector>& tasks() const { return tasks_; }
  std::size_t size() const { return tasks_.size(); }
  const TaskVector& operator[](std::size_t k) const { return tasks_[k]; }
  std::size_t counter_index(std::size_t k) const;
  /// Throws ContractViolation for unknown names.
  std::size_t index_of(const std::string& task_name) const;

 private:
  std::string name_;
  std::vector<TaskVector> tasks_;
};

/// Torso yaw rotation and pose captured when an episode starts.
struct EpisodeFrame {
  std::array<double, 4> rotation{1.0, 0.0, 0.0, 1.0};  // row-major R0
  env::Pose origin;

  static EpisodeFrame at(const env::Pose& pose);
  /// R0^-1 v for a world-frame planar vector.
  std::array<double, 2> to_local(double dx, double dy) const;
};

inline constexpr double kSmoothnessWeight = 0.001;

/// [w1, w2] . R0^-1 (x_t - x_{t-1}) + w3 (theta_t - theta_{t-1}) - 0.001 |a_t - 2 a_{t-1} + a_{t-2}|^2.
/// action_window holds a_{t-2}, a_{t-1}, a_t in that order.
double task_reward(const EpisodeFrame& frame, const env::Pose& prev, const env::Pose& cur,
                   std::span<const env::Action, 3> action_window, const TaskVector& w);

/// Index of the task whose direction points closest to the workspace center as
/// seen from the robot; exact ties go to the lower index.
std::size_t select_task(const env::Pose& robot, double center_x, double center_y,
                        const TaskSet& tasks);

/// Bearing of (center - robot) in the robot frame, in (-pi, pi].
double center_bearing(const env::Pose& robot, double center_x, double center_y);

}  // namespace safewalk::tasks
