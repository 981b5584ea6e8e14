#include "safewalk/tasks/session.hpp"

#include <array>
#include <cmath>
#include <random>
#include <sstream>

#include "safewalk/error.hpp"

namespace safewalk::tasks {

namespace {

constexpr std::uint64_t kEnvStream = 0x656e76;
constexpr std::uint64_t kLearnerStream = 0x6c726e;
constexpr std::uint64_t kReplayStream = 0x726570;

env::Action to_action(const std::vector<double>& v) {
  env::Action a{};
  for (std::size_t j = 0; j < env::kActionDim; ++j) a[j] = v[j];
  return a;
}

}  // namespace

std::string to_string(SchedulerMode mode) {
  switch (mode) {
    case SchedulerMode::center:
      return "center";
    case SchedulerMode::round_robin:
      return "round_robin";
    case SchedulerMode::single_task:
      return "single_task";
  }
  return "unknown";
}

SchedulerMode parse_scheduler(const std::string& text) {
  if (text == "center") return SchedulerMode::center;
  if (text == "round_robin") return SchedulerMode::round_robin;
  if (text == "single_task") return SchedulerMode::single_task;
  throw ContractViolation("unknown scheduler '" + text +
                          "' (expected center, round_robin or single_task)");
}

SafetyMode SafetyMode::parse(const std::string& text) {
  if (text == "lagrangian") return lagrangian();
  if (text == "none") return none();
  const std::string prefix = "fixed_weight:";
  if (text.rfind(prefix, 0) == 0) {
    try {
      std::size_t used = 0;
      const std::string number = text.substr(prefix.size());
      const double w = std::stod(number, &used);
      if (used == number.size() && std::isfinite(w)) return fixed(w);
    } catch (const std::logic_error&) {
    }
  }
  throw ContractViolation("unknown safety mode '" + text +
                          "' (expected lagrangian, none or fixed_weight:<w>)");
}

std::string SafetyMode::label() const {
  switch (kind) {
    case Kind::lagrangian:
      return "lagrangian";
    case Kind::none:
      return "none";
    case Kind::fixed_weight: {
      std::ostringstream os;
      os << "fixed_weight:" << weight;
      return os.str();
    }
  }
  return "unknown";
}

void SessionConfig::validate() const {
  require(tasks.size() > 0, "task set is empty");
  require(horizon > 0, "horizon must be positive");
  require(reward_scale > 0.0 && std::isfinite(reward_scale), "reward_scale must be positive");
  require(workspace.half_width > 0.0 && workspace.half_height > 0.0, "workspace must be positive");
  require(sac.batch_size > 0 && sac.gradient_steps > 0, "batch size and gradient steps must be positive");
  require(sac.replay_capacity >= sac.batch_size, "replay capacity must hold a batch");
  require(!sac.hidden.empty(), "networks need at least one hidden layer");
  for (std::size_t h : sac.hidden) require(h > 0, "hidden widths must be positive");
  require(sac.gamma >= 0.0 && sac.gamma <= 1.0, "gamma must lie in [0, 1]");
  require(sac.tau >= 0.0 && sac.tau <= 1.0, "tau must lie in [0, 1]");
  require(sac.learning_rate > 0.0 && sac.lambda_lr >= 0.0 && sac.alpha_lr >= 0.0,
          "learning rates must be non-negative");
  require(sac.alpha_init > 0.0, "alpha_init must be positive");
  require(sac.lambda_init >= 0.0, "lambda_init must be non-negative");
  require(safety.kind != SafetyMode::Kind::fixed_weight || std::isfinite(safety.weight),
          "fixed safety weight must be finite");
}

sac::SacConfig learner_config(const sac::SacConfig& base, const SafetyMode& safety) {
  sac::SacConfig cfg = base;
  if (safety.kind != SafetyMode::Kind::lagrangian) {
    cfg.lambda_init = 0.0;
    cfg.lambda_learnable = false;
    cfg.safety_critic = false;
  }
  return cfg;
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(index)};
  std::array<std::uint32_t, 2> out{};
  seq.generate(out.begin(), out.end());
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

TrainingSession::TrainingSession(SessionConfig config, std::string run_label)
    : config_(std::move(config)), run_label_(std::move(run_label)) {
  config_.validate();
  const sac::SacConfig lcfg = learner_config(config_.sac, config_.safety);
  for (std::size_t k = 0; k < config_.tasks.size(); ++k) {
    learners_.emplace_back(lcfg, env::kObsDim, env::kActionDim,
                           derive_seed(config_.seed, kLearnerStream, k));
    buffers_.emplace_back(env::kObsDim, env::kActionDim, config_.sac.replay_capacity,
                          derive_seed(config_.seed, kReplayStream, k));
  }
  env_rng_.seed(derive_seed(config_.seed, kEnvStream));
  walker_ = env::reset(env::WalkerState{}, env_rng_, env::ResetMode::episode_start).state;
}

std::size_t TrainingSession::next_task() const {
  switch (config_.scheduler) {
    case SchedulerMode::center:
      return select_task(walker_.pose(), 0.0, 0.0, config_.tasks);
    case SchedulerMode::round_robin:
      return counters_.episodes % config_.tasks.size();
    case SchedulerMode::single_task:
      return 0;
  }
  return 0;
}

bool TrainingSession::run_episode() {
  const std::size_t budget = config_.total_steps();
  if (counters_.steps >= budget) return false;

  const std::size_t k = next_task();
  const TaskVector& task = config_.tasks[k];
  sac::Learner& learner = learners_[k];
  sac::ReplayBuffer& buffer = buffers_[k];
  const bool shaped = config_.safety.kind == SafetyMode::Kind::fixed_weight &&
                      config_.safety.weight != 0.0;

  const EpisodeFrame frame = EpisodeFrame::at(walker_.pose());
  env::ObservationHistory history;
  history.reset(walker_);

  RunRecord record;
  record.run = run_label_;
  record.seed = config_.seed;
  record.episode = counters_.episodes;
  record.task = task.name;

  enum class Ending { horizon, fall, escape, boundary, budget };
  Ending ending = Ending::budget;

  for (std::size_t t = 0; t < config_.horizon && counters_.steps < budget; ++t) {
    const std::vector<double> obs = history.observe();
    const env::Action action = to_action(learner.act(obs, false));
    const env::StepResult result = env::step(walker_, action, config_.terrain,
                                             config_.workspace, config_.dynamics, env_rng_);
    const std::array<env::Action, 3> window{walker_.prev_prev_action, walker_.prev_action, action};
    const double task_r =
        config_.reward_scale * task_reward(frame, result.before, result.after, window, task);

    sac::TerminationKind kind = sac::TerminationKind::running;
    if (result.events.fall) {
      kind = sac::TerminationKind::fall_terminal;
      ending = Ending::fall;
    } else if (result.events.out_of_workspace) {
      kind = sac::TerminationKind::boundary_timeout;
      ending = Ending::escape;
    } else if (result.events.near_boundary_outbound && config_.boundary_termination()) {
      kind = sac::TerminationKind::boundary_timeout;
      ending = Ending::boundary;
    } else if (t + 1 == config_.horizon) {
      kind = sac::TerminationKind::episode_timeout;
      ending = Ending::horizon;
    }

    history.push(result.state);
    sac::Transition tr;
    tr.obs = obs;
    tr.action.assign(action.begin(), action.end());
    tr.reward = shaped ? task_r + config_.safety.weight * result.safety : task_r;
    tr.next_obs = history.observe();
    tr.safety = result.safety;
    tr.kind = kind;
    buffer.add(tr);
    learner.train_step(buffer);

    walker_ = result.state;
    ++counters_.steps;
    ++record.steps;
    counters_.sim_time += env::kDt;
    record.episode_return += task_r;
    if (kind != sac::TerminationKind::running) break;
  }

  env::ResetMode next_reset = env::ResetMode::episode_start;
  if (ending == Ending::fall) {
    ++counters_.falls;
    next_reset = env::ResetMode::after_fall;
  } else if (ending == Ending::escape) {
    ++counters_.out_of_workspace;
    next_reset = env::ResetMode::after_escape;
  }
  const env::ResetResult reset = env::reset(walker_, env_rng_, next_reset);
  walker_ = reset.state;
  counters_.sim_time += reset.time_cost;
  ++counters_.episodes;

  record.falls = counters_.falls;
  record.out_of_workspace = counters_.out_of_workspace;
  record.sim_time = counters_.sim_time;
  record.lambda = learner.state().lambda;
  record.alpha = learner.state().alpha();
  records_.push_back(record);
  return true;
}

void TrainingSession::run(const std::function<void(const RunRecord&)>& on_episode) {
  while (run_episode()) {
    if (on_episode) on_episode(records_.back());
  }
}

SessionResult training_session(const SessionConfig& config, const std::string& run_label) {
  TrainingSession session(config, run_label);
  session.run();
  return {session.counters(), session.records(), session.learners()};
}

}  // namespace safewalk::tasks
