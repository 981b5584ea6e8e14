#include "safewalk/harness/evaluate.hpp"

#include <array>
#include <cmath>

#include "safewalk/tasks/controller.hpp"
#include "safewalk/tasks/task.hpp"

namespace safewalk::harness {

namespace {

constexpr std::uint64_t kEvalStream = 0x6576616c;

env::Workspace open_field() { return {1e9, 1e9}; }

template <class Controller>
void rollout(const tasks::SessionConfig& s, const tasks::TaskVector& task, Controller&& control, std::uint64_t stream,
             TaskEvaluation& ev) {
  std::mt19937_64 rng(stream);
  env::WalkerState walker = env::reset(env::WalkerState{}, rng, env::ResetMode::episode_start).state;
  const tasks::EpisodeFrame frame = tasks::EpisodeFrame::at(walker.pose());
  env::ObservationHistory history;
  history.reset(walker);
  double yaw_change = 0.0;
  std::size_t steps = 0;
  for (std::size_t t = 0; t < s.horizon; ++t) {
    const env::Action action = control(walker, history);
    const auto result = env::step(walker, action, s.terrain, open_field(), s.dynamics, rng);
    const std::array<env::Action, 3> window{walker.prev_prev_action, walker.prev_action, action};
    ev.mean_return += s.reward_scale * tasks::task_reward(frame, result.before, result.after, window, task);
    yaw_change += env::wrap_angle(result.after.yaw - result.before.yaw);
    walker = result.state;
    history.push(walker);
    ++steps;
    if (result.events.fall) {
      ++ev.falls;
      break;
    }
  }
  ev.mean_displacement += frame.to_local(walker.x - frame.origin.x, walker.y - frame.origin.y)[0];
  ev.mean_yaw_change += yaw_change;
  ev.mean_steps += static_cast<double>(steps);
}

void average(TaskEvaluation& ev) {
  if (ev.episodes == 0) return;
  const double n = static_cast<double>(ev.episodes);
  ev.mean_return /= n;
  ev.mean_displacement /= n;
  ev.mean_yaw_change /= n;
  ev.mean_steps /= n;
}

}  // namespace

env::Action scripted_gait(const env::WalkerState& s) { return {std::sin(s.phase) >= 0.0 ? 1.0 : -1.0, 0.0, 0.0, 0.0}; }

EvaluationStats evaluate_policy(const Checkpoint& checkpoint, std::size_t episodes, std::uint64_t seed) {
  const tasks::SessionConfig& s = checkpoint.config.session;
  EvaluationStats stats;
  const std::vector<double> zero(env::kActionDim, 0.0);
  for (std::size_t k = 0; k < checkpoint.learners.size(); ++k) {
    const approx::GaussianPolicyHead& policy = checkpoint.learners[k].actor;
    TaskEvaluation ev;
    ev.task = s.tasks[k].name;
    ev.episodes = episodes;
    auto act = [&](const env::WalkerState&, const env::ObservationHistory& history) {
      const auto sample = approx::policy_sample(policy, history.observe(), zero);
      env::Action action{};
      for (std::size_t j = 0; j < env::kActionDim; ++j) action[j] = sample.action[j];
      return action;
    };
    for (std::size_t e = 0; e < episodes; ++e)
      rollout(s, s.tasks[k], act, tasks::derive_seed(seed, kEvalStream, k * 1000003 + e), ev);
    average(ev);
    stats.tasks.push_back(ev);
  }
  return stats;
}

TaskEvaluation evaluate_scripted_gait(const tasks::SessionConfig& session, std::size_t episodes, std::uint64_t seed) {
  TaskEvaluation ev;
  ev.task = session.tasks[0].name;
  ev.episodes = episodes;
  auto act = [](const env::WalkerState& w, const env::ObservationHistory&) { return scripted_gait(w); };
  for (std::size_t e = 0; e < episodes; ++e)
    rollout(session, session.tasks[0], act, tasks::derive_seed(seed, kEvalStream, e), ev);
  average(ev);
  return ev;
}

std::vector<env::TrajectoryRecord> evaluate_commands(const Checkpoint& checkpoint,
                                                     const std::vector<std::string>& command_stream,
                                                     std::uint64_t seed) {
  const tasks::SessionConfig& s = checkpoint.config.session;
  tasks::ControllerSettings settings;
  settings.terrain = s.terrain;
  settings.workspace = open_field();
  settings.dynamics = s.dynamics;
  settings.seed = seed;
  settings.reward_scale = s.reward_scale;
  return tasks::compose_controller(s.tasks, checkpoint.policies(), command_stream, settings);
}

}  // namespace safewalk::harness
