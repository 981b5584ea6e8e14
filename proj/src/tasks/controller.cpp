#include "safewalk/tasks/controller.hpp"

#include <array>

#include "safewalk/error.hpp"
#include "safewalk/tasks/session.hpp"

namespace safewalk::tasks {

namespace {
constexpr std::uint64_t kControllerStream = 0x637472;
}

ComposedController::ComposedController(TaskSet tasks,
                                       std::vector<approx::GaussianPolicyHead> policies,
                                       ControllerSettings settings)
    : tasks_(std::move(tasks)), policies_(std::move(policies)), settings_(std::move(settings)) {
  require(policies_.size() == tasks_.size(), "need exactly one policy per task");
  for (const auto& p : policies_) {
    require(p.obs_dim() == env::kObsDim && p.action_dim() == env::kActionDim,
            "policy dimensions do not match the walker");
  }
  rng_.seed(derive_seed(settings_.seed, kControllerStream));
  reset();
}

void ComposedController::reset() {
  walker_ = env::WalkerState{};
  history_.reset(walker_);
  frame_ = EpisodeFrame::at(walker_.pose());
  has_active_ = false;
}

env::TrajectoryRecord ComposedController::step(const std::string& task_name) {
  const std::size_t k = tasks_.index_of(task_name);
  if (!has_active_ || k != active_) {
    frame_ = EpisodeFrame::at(walker_.pose());
    active_ = k;
    has_active_ = true;
  }
  const std::vector<double> obs = history_.observe();
  const std::vector<double> zero(env::kActionDim, 0.0);
  const approx::PolicySample sample = approx::policy_sample(policies_[k], obs, zero);
  env::Action action{};
  for (std::size_t j = 0; j < env::kActionDim; ++j) action[j] = sample.action[j];

  const env::StepResult result = env::step(walker_, action, settings_.terrain,
                                           settings_.workspace, settings_.dynamics, rng_);
  const std::array<env::Action, 3> window{walker_.prev_prev_action, walker_.prev_action, action};

  env::TrajectoryRecord rec;
  rec.t = t_++;
  rec.action = action;
  rec.reward = settings_.reward_scale *
               task_reward(frame_, result.before, result.after, window, tasks_[k]);
  rec.f_s = result.safety;
  rec.task = task_name;
  rec.fall = result.events.fall;
  rec.out_of_workspace = result.events.out_of_workspace;
  rec.near_boundary = result.events.near_boundary_outbound;

  walker_ = result.state;
  history_.push(walker_);
  if (result.events.fall || result.events.out_of_workspace) {
    if (result.events.fall) ++falls_;
    walker_ = env::reset(walker_, rng_,
                         result.events.fall ? env::ResetMode::after_fall
                                            : env::ResetMode::after_escape)
                  .state;
    history_.reset(walker_);
    frame_ = EpisodeFrame::at(walker_.pose());
  }
  rec.x = walker_.x;
  rec.y = walker_.y;
  rec.yaw = walker_.yaw;
  rec.roll = walker_.roll;
  rec.pitch = walker_.pitch;
  return rec;
}

std::vector<env::TrajectoryRecord> compose_controller(
    const TaskSet& tasks, const std::vector<approx::GaussianPolicyHead>& policies,
    const std::vector<std::string>& command_stream, const ControllerSettings& settings) {
  ComposedController controller(tasks, policies, settings);
  std::vector<env::TrajectoryRecord> out;
  out.reserve(command_stream.size());
  for (const std::string& name : command_stream) out.push_back(controller.step(name));
  return out;
}

}  // namespace safewalk::tasks
