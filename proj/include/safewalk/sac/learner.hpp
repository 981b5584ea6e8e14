#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <vector>

#include "safewalk/approx/adam.hpp"
#include "safewalk/approx/mlp.hpp"
#include "safewalk/approx/policy.hpp"
#include "safewalk/sac/replay_buffer.hpp"

namespace safewalk::sac {

/// Where the multiplier update reads the safety signal from.
enum class LambdaSignal {
  stored_margin,  // mean f_s stored in the batch
  safety_critic,  // mean S(s, a ~ pi)
};

struct SacConfig {
  std::vector<std::size_t> hidden{approx::kDefaultHidden, approx::kDefaultHidden};
  double learning_rate = approx::kDefaultLearningRate;
  double gamma = 0.99;
  double tau = 0.005;
  std::size_t batch_size = 256;
  std::size_t warmup = 1000;
  std::size_t replay_capacity = kDefaultCapacity;
  std::size_t gradient_steps = 2;

  double lambda_init = 1.0;
  double lambda_lr = 0.01;
  /// When false lambda stays at lambda_init for the whole run.
  bool lambda_learnable = true;
  LambdaSignal lambda_signal = LambdaSignal::stored_margin;
  /// Train S and use it in the actor loss. Off gives plain SAC.
  bool safety_critic = true;

  double alpha_init = 1.0;
  double alpha_lr = approx::kDefaultLearningRate;
  /// Defaults to minus the action dimension when left NaN.
  double target_entropy = std::numeric_limits<double>::quiet_NaN();

  bool operator==(const SacConfig&) const = default;
};

/// Everything that defines one task's learner.
struct LearnerState {
  approx::GaussianPolicyHead actor;
  approx::Mlp q1, q2, q1_target, q2_target;
  approx::Mlp s_critic, s_target;
  double lambda = 1.0;
  double log_alpha = 0.0;
  approx::AdamState actor_opt, q1_opt, q2_opt, s_opt;
  std::mt19937_64 rng;

  double alpha() const;
  bool operator==(const LearnerState&) const = default;
};

struct Targets {
  std::vector<double> q;
  std::vector<double> safety;
  std::vector<double> next_min_q;     // min(q1_target, q2_target)(s', a')
  std::vector<double> next_log_prob;  // log pi(a' | s')
  std::vector<double> next_safety;    // s_target(s', a')
};

struct CriticLosses {
  double q_loss = 0.0;  // mean of the two twin MSEs
  double s_loss = 0.0;
};

struct ActorStats {
  double loss = 0.0;
  std::vector<double> log_probs;
};

struct TrainDiagnostics {
  bool trained = false;
  double q_loss = 0.0;
  double s_loss = 0.0;
  double actor_loss = 0.0;
  double lambda = 0.0;
  double alpha = 0.0;
};

/// reward + gamma * next_soft_value unless the transition is a genuine failure.
double q_backup(double reward, TerminationKind kind, double gamma, double next_soft_value);
double safety_backup(double safety, TerminationKind kind, double gamma, double next_safety_value);

/// Projected dual descent on J(lambda) = lambda * E[f_s].
double lambda_step(double lambda, double mean_signal, double lr);

/// Dual descent on log alpha for the entropy constraint; returns the new log alpha.
double log_alpha_step(double log_alpha, double mean_log_prob, double target_entropy, double lr);

/// Safety-constrained soft actor-critic for a single task.
class Learner {
 public:
  Learner(SacConfig config, std::size_t obs_dim, std::size_t action_dim, std::uint64_t seed);
  Learner(SacConfig config, LearnerState state);

  const SacConfig& config() const { return config_; }
  LearnerState& state() { return state_; }
  const LearnerState& state() const { return state_; }
  std::size_t obs_dim() const { return state_.actor.obs_dim(); }
  std::size_t action_dim() const { return state_.actor.action_dim(); }
  double target_entropy() const;

  /// Stochastic sample from the policy, or tanh(mean) when deterministic.
  std::vector<double> act(std::span<const double> obs, bool deterministic);

  Targets compute_targets(const Batch& batch, const approx::Matrix& next_noise) const;
  Targets compute_targets(const Batch& batch);

  CriticLosses critic_update(const Batch& batch);
  ActorStats actor_update(const Batch& batch, const approx::Matrix& noise);
  ActorStats actor_update(const Batch& batch);
  double lambda_update(const Batch& batch);
  double alpha_update(std::span<const double> log_probs);
  /// Samples fresh actions for the batch and applies alpha_update.
  double alpha_update(const Batch& batch);

  /// gradient_steps rounds of critic, actor, lambda and alpha updates, or nothing
  /// while the buffer holds fewer than max(warmup, batch_size) transitions.
  TrainDiagnostics train_step(ReplayBuffer& buffer);

 private:
  approx::Matrix draw_noise(std::size_t rows);
  bool uses_safety_in_actor() const;

  SacConfig config_;
  LearnerState state_;
};

/// Concatenates observation and action rows into critic inputs.
approx::Matrix critic_input(const approx::Matrix& obs, const approx::Matrix& action);

}  // namespace safewalk::sac
