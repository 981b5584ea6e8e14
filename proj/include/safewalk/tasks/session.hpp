#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "safewalk/env/walker.hpp"
#include "safewalk/sac/learner.hpp"
#include "safewalk/sac/replay_buffer.hpp"
#include "safewalk/tasks/task.hpp"

namespace safewalk::tasks {

enum class SchedulerMode { center, round_robin, single_task };

std::string to_string(SchedulerMode mode);
SchedulerMode parse_scheduler(const std::string& text);

struct SafetyMode {
  enum class Kind { lagrangian, fixed_weight, none };
  Kind kind = Kind::lagrangian;
  double weight = 0.0;  // reward shaping weight for fixed_weight

  static SafetyMode lagrangian() { return {Kind::lagrangian, 0.0}; }
  static SafetyMode fixed(double w) { return {Kind::fixed_weight, w}; }
  static SafetyMode none() { return {Kind::none, 0.0}; }
  /// "lagrangian", "none" or "fixed_weight:<w>".
  static SafetyMode parse(const std::string& text);
  std::string label() const;
  bool operator==(const SafetyMode&) const = default;
};

inline constexpr std::size_t kDefaultHorizon = 500;
/// Multiplies the task reward so the scripted reference gait scores >= 25 per episode.
inline constexpr double kDefaultRewardScale = 10.0;

struct SessionConfig {
  TaskSet tasks = TaskSet::two_task();
  env::Terrain terrain = env::Terrain::flat();
  env::Workspace workspace = env::Workspace::large();
  env::Dynamics dynamics;
  SchedulerMode scheduler = SchedulerMode::center;
  SafetyMode safety;
  std::uint64_t seed = 0;
  /// Total environment steps are steps_per_task * tasks.size(), whatever the scheduler.
  std::size_t steps_per_task = 60000;
  std::size_t horizon = kDefaultHorizon;
  double reward_scale = kDefaultRewardScale;
  sac::SacConfig sac;

  std::size_t total_steps() const { return steps_per_task * tasks.size(); }
  /// Early termination near the boundary belongs to the multi-task method; the
  /// single-task baseline walks until it leaves the workspace.
  bool boundary_termination() const { return scheduler != SchedulerMode::single_task; }
  /// Throws ContractViolation on inconsistent settings.
  void validate() const;
};

/// Learner configuration implied by a safety mode.
sac::SacConfig learner_config(const sac::SacConfig& base, const SafetyMode& safety);

/// One row per finished (or budget-truncated) episode.
struct RunRecord {
  std::string run;
  std::uint64_t seed = 0;
  std::size_t episode = 0;
  std::string task;
  std::size_t steps = 0;
  double episode_return = 0.0;  // scaled task reward, without safety shaping
  std::size_t falls = 0;             // cumulative
  std::size_t out_of_workspace = 0;  // cumulative
  double sim_time = 0.0;             // cumulative seconds, reset costs included
  double lambda = 0.0;
  double alpha = 0.0;

  bool operator==(const RunRecord&) const = default;
};

struct SessionCounters {
  std::size_t episodes = 0;
  std::size_t steps = 0;
  std::size_t falls = 0;
  std::size_t out_of_workspace = 0;
  double sim_time = 0.0;
};

/// The outer loop: schedule a task, roll out its policy, store into that task's
/// buffer only, train that task's learner after every step.
class TrainingSession {
 public:
  explicit TrainingSession(SessionConfig config, std::string run_label = "train");

  /// Runs one episode; returns false once the step budget is exhausted.
  bool run_episode();
  /// Runs until the budget is spent, invoking on_episode after each record.
  void run(const std::function<void(const RunRecord&)>& on_episode = {});

  const SessionConfig& config() const { return config_; }
  const SessionCounters& counters() const { return counters_; }
  const std::vector<RunRecord>& records() const { return records_; }
  const std::vector<sac::Learner>& learners() const { return learners_; }
  std::vector<sac::Learner>& learners() { return learners_; }
  const std::vector<sac::ReplayBuffer>& buffers() const { return buffers_; }
  const env::WalkerState& walker() const { return walker_; }
  std::mt19937_64& env_rng() { return env_rng_; }
  const std::mt19937_64& env_rng() const { return env_rng_; }

  std::size_t next_task() const;

 private:
  SessionConfig config_;
  std::string run_label_;
  std::vector<sac::Learner> learners_;
  std::vector<sac::ReplayBuffer> buffers_;
  env::WalkerState walker_;
  std::mt19937_64 env_rng_;
  SessionCounters counters_;
  std::vector<RunRecord> records_;
};

struct SessionResult {
  SessionCounters counters;
  std::vector<RunRecord> records;
  std::vector<sac::Learner> learners;
};

SessionResult training_session(const SessionConfig& config, const std::string& run_label = "train");

/// Deterministic per-purpose seed derived from the run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream, std::uint64_t index = 0);

}  // namespace safewalk::tasks
