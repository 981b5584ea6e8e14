#include "safewalk/tasks/task.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "safewalk/error.hpp"

namespace safewalk::tasks {

namespace {

std::string counter_name(const std::string& name) {
  if (name == "forward") return "backward";
  if (name == "backward") return "forward";
  if (name == "turn-left") return "turn-right";
  if (name == "turn-right") return "turn-left";
  return "counter-" + name;
}

}  // namespace

TaskVector TaskVector::counter() const { return {-w1, -w2, -w3, counter_name(name)}; }

double TaskVector::bearing() const {
  if (w1 != 0.0 || w2 != 0.0) return std::atan2(w2, w1);
  return w3 > 0.0 ? std::numbers::pi / 2.0 : -std::numbers::pi / 2.0;
}

TaskSet::TaskSet(std::string name, std::vector<TaskVector> tasks)
    : name_(std::move(name)), tasks_(std::move(tasks)) {
  require(!tasks_.empty(), "a task set needs at least one task");
  for (const TaskVector& t : tasks_) {
    require(t.w1 != 0.0 || t.w2 != 0.0 || t.w3 != 0.0, "task vectors must be nonzero");
    const TaskVector c = t.counter();
    bool found = false;
    for (const TaskVector& u : tasks_) {
      found = found || (u.w1 == c.w1 && u.w2 == c.w2 && u.w3 == c.w3);
    }
    require(found, "every task needs its counter-task in the set");
  }
}

TaskSet TaskSet::two_task() {
  return TaskSet("two-task", {{1.0, 0.0, 0.0, "forward"}, {-1.0, 0.0, 0.0, "backward"}});
}

TaskSet TaskSet::four_task() {
  return TaskSet("four-task", {{1.0, 0.0, 0.0, "forward"},
                               {-1.0, 0.0, 0.0, "backward"},
                               {0.0, 0.0, 0.5, "turn-left"},
                               {0.0, 0.0, -0.5, "turn-right"}});
}

TaskSet TaskSet::by_name(const std::string& name) {
  if (name == "two-task") return two_task();
  if (name == "four-task") return four_task();
  throw ContractViolation("unknown task set '" + name + "' (expected two-task or four-task)");
}

std::size_t TaskSet::counter_index(std::size_t k) const {
  const TaskVector c = tasks_.at(k).counter();
  for (std::size_t j = 0; j < tasks_.size(); ++j) {
    if (tasks_[j].w1 == c.w1 && tasks_[j].w2 == c.w2 && tasks_[j].w3 == c.w3) return j;
  }
  throw ContractViolation("task has no counter-task");
}

std::size_t TaskSet::index_of(const std::string& task_name) const {
  for (std::size_t j = 0; j < tasks_.size(); ++j) {
    if (tasks_[j].name == task_name) return j;
  }
  throw ContractViolation("unknown task '" + task_name + "' in set " + name_);
}

EpisodeFrame EpisodeFrame::at(const env::Pose& pose) {
  const double c = std::cos(pose.yaw);
  const double s = std::sin(pose.yaw);
  return {{c, -s, s, c}, pose};
}

std::array<double, 2> EpisodeFrame::to_local(double dx, double dy) const {
  // R0 is orthonormal, so its inverse is the transpose.
  return {rotation[0] * dx + rotation[2] * dy, rotation[1] * dx + rotation[3] * dy};
}

double task_reward(const EpisodeFrame& frame, const env::Pose& prev, const env::Pose& cur,
                   std::span<const env::Action, 3> action_window, const TaskVector& w) {
  const auto local = frame.to_local(cur.x - prev.x, cur.y - prev.y);
  const double turn = env::wrap_angle(cur.yaw - prev.yaw);
  double accel_sq = 0.0;
  for (std::size_t j = 0; j < env::kActionDim; ++j) {
    const double accel = action_window[2][j] - 2.0 * action_window[1][j] + action_window[0][j];
    accel_sq += accel * accel;
  }
  return w.w1 * local[0] + w.w2 * local[1] + w.w3 * turn - kSmoothnessWeight * accel_sq;
}

double center_bearing(const env::Pose& robot, double center_x, double center_y) {
  const double dx = center_x - robot.x;
  const double dy = center_y - robot.y;
  const double ahead = std::cos(robot.yaw) * dx + std::sin(robot.yaw) * dy;
  const double left = -std::sin(robot.yaw) * dx + std::cos(robot.yaw) * dy;
  return std::atan2(left, ahead);
}

std::size_t select_task(const env::Pose& robot, double center_x, double center_y,
                        const TaskSet& tasks) {
  const double target = center_bearing(robot, center_x, center_y);
  std::size_t best = 0;
  double best_gap = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    const double gap = std::abs(env::wrap_angle(target - tasks[k].bearing()));
    if (gap < best_gap) {
      best = k;
      best_gap = gap;
    }
  }
  return best;
}

}  // namespace safewalk::tasks
