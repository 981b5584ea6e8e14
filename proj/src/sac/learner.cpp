#include "safewalk/sac/learner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "safewalk/error.hpp"

namespace safewalk::sac {

using approx::Matrix;
using approx::Mlp;

namespace {

std::vector<std::size_t> critic_sizes(std::size_t obs_dim, std::size_t action_dim,
                                      const std::vector<std::size_t>& hidden) {
  std::vector<std::size_t> sizes{obs_dim + action_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  return sizes;
}

double mean(std::span<const double> v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// One MSE regression step of net toward targets; returns the pre-update loss.
double regress(Mlp& net, approx::AdamState& opt, const Matrix& input,
               std::span<const double> targets) {
  approx::MlpTrace trace;
  net.forward(input, trace);
  const Matrix& pred = trace.output();
  const std::size_t n = targets.size();
  Matrix upstream(n, 1);
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double residual = pred(r, 0) - targets[r];
    loss += residual * residual;
    upstream(r, 0) = 2.0 * residual / static_cast<double>(n);
  }
  std::vector<double> grad(net.num_params(), 0.0);
  net.backward(trace, upstream, grad, nullptr);
  approx::adam_step(net.params(), grad, opt);
  return loss / static_cast<double>(n);
}

}  // namespace

double LearnerState::alpha() const { return std::exp(log_alpha); }

double q_backup(double reward, TerminationKind kind, double gamma, double next_soft_value) {
  if (is_terminal(kind)) return reward;
  return reward + gamma * next_soft_value;
}

double safety_backup(double safety, TerminationKind kind, double gamma, double next_safety_value) {
  if (is_terminal(kind)) return safety;
  return safety + gamma * next_safety_value;
}

double lambda_step(double lambda, double mean_signal, double lr) {
  return std::max(0.0, lambda - lr * mean_signal);
}

double log_alpha_step(double log_alpha, double mean_log_prob, double target_entropy, double lr) {
  // d/d(log alpha) of -alpha * (log pi + target_entropy), taken at alpha = exp(log alpha)
  // with the sample held fixed, reduces to -(mean log pi + target_entropy).
  const double grad = -(mean_log_prob + target_entropy);
  return log_alpha - lr * grad;
}

Matrix critic_input(const Matrix& obs, const Matrix& action) {
  require(obs.rows() == action.rows(), "critic input row mismatch");
  Matrix x(obs.rows(), obs.cols() + action.cols());
  for (std::size_t r = 0; r < obs.rows(); ++r) {
    auto row = x.row(r);
    std::copy(obs.row(r).begin(), obs.row(r).end(), row.begin());
    std::copy(action.row(r).begin(), action.row(r).end(), row.begin() + obs.cols());
  }
  return x;
}

Learner::Learner(SacConfig config, std::size_t obs_dim, std::size_t action_dim, std::uint64_t seed)
    : config_(std::move(config)) {
  require(config_.gamma >= 0.0 && config_.gamma <= 1.0, "gamma must lie in [0, 1]");
  require(config_.batch_size > 0, "batch size must be positive");
  require(config_.lambda_init >= 0.0, "lambda must start non-negative");
  require(config_.alpha_init > 0.0, "alpha must start positive");
  std::mt19937_64 init_rng(seed);
  state_.actor = approx::GaussianPolicyHead::make(obs_dim, action_dim, config_.hidden, init_rng);
  const auto sizes = critic_sizes(obs_dim, action_dim, config_.hidden);
  state_.q1 = Mlp::uniform(sizes, init_rng);
  state_.q2 = Mlp::uniform(sizes, init_rng);
  state_.s_critic = Mlp::uniform(sizes, init_rng);
  state_.q1_target = state_.q1;
  state_.q2_target = state_.q2;
  state_.s_target = state_.s_critic;
  state_.lambda = config_.lambda_init;
  state_.log_alpha = std::log(config_.alpha_init);
  const double lr = config_.learning_rate;
  state_.actor_opt = approx::AdamState(state_.actor.trunk().num_params(), lr);
  state_.q1_opt = approx::AdamState(state_.q1.num_params(), lr);
  state_.q2_opt = approx::AdamState(state_.q2.num_params(), lr);
  state_.s_opt = approx::AdamState(state_.s_critic.num_params(), lr);
  state_.rng.seed(init_rng());
}

Learner::Learner(SacConfig config, LearnerState state)
    : config_(std::move(config)), state_(std::move(state)) {
  require(state_.q1.same_architecture(state_.q1_target) &&
              state_.q2.same_architecture(state_.q2_target) &&
              state_.s_critic.same_architecture(state_.s_target),
          "target networks must match their sources");
  require(state_.lambda >= 0.0, "lambda must be non-negative");
}

double Learner::target_entropy() const {
  return std::isnan(config_.target_entropy) ? -static_cast<double>(action_dim())
                                            : config_.target_entropy;
}

bool Learner::uses_safety_in_actor() const {
  return config_.safety_critic && state_.lambda != 0.0;
}

Matrix Learner::draw_noise(std::size_t rows) {
  Matrix noise(rows, action_dim());
  std::normal_distribution<double> normal(0.0, 1.0);
  for (double& v : noise.data()) v = normal(state_.rng);
  return noise;
}

std::vector<double> Learner::act(std::span<const double> obs, bool deterministic) {
  std::vector<double> noise(action_dim(), 0.0);
  if (!deterministic) {
    const Matrix n = draw_noise(1);
    noise.assign(n.row(0).begin(), n.row(0).end());
  }
  return approx::policy_sample(state_.actor, obs, noise).action;
}

Targets Learner::compute_targets(const Batch& batch, const Matrix& next_noise) const {
  const std::size_t n = batch.size();
  approx::PolicyBatch next;
  approx::policy_sample_batch(state_.actor, batch.next_obs, next_noise, next);
  const Matrix input = critic_input(batch.next_obs, next.action);

  approx::MlpTrace t1;
  approx::MlpTrace t2;
  state_.q1_target.forward(input, t1);
  state_.q2_target.forward(input, t2);
  approx::MlpTrace ts;
  if (config_.safety_critic) state_.s_target.forward(input, ts);

  const double alpha = state_.alpha();
  Targets out;
  out.q.resize(n);
  out.safety.resize(n);
  out.next_min_q.resize(n);
  out.next_log_prob = next.log_prob;
  out.next_safety.assign(n, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const double min_q = std::min(t1.output()(r, 0), t2.output()(r, 0));
    out.next_min_q[r] = min_q;
    out.q[r] = q_backup(batch.reward[r], batch.kind[r], config_.gamma,
                        min_q - alpha * next.log_prob[r]);
    if (config_.safety_critic) {
      out.next_safety[r] = ts.output()(r, 0);
      out.safety[r] = safety_backup(batch.safety[r], batch.kind[r], config_.gamma,
                                    out.next_safety[r]);
    }
  }
  return out;
}

Targets Learner::compute_targets(const Batch& batch) {
  return compute_targets(batch, draw_noise(batch.size()));
}

CriticLosses Learner::critic_update(const Batch& batch) {
  const Targets targets = compute_targets(batch);
  const Matrix input = critic_input(batch.obs, batch.action);
  CriticLosses losses;
  const double l1 = regress(state_.q1, state_.q1_opt, input, targets.q);
  const double l2 = regress(state_.q2, state_.q2_opt, input, targets.q);
  losses.q_loss = 0.5 * (l1 + l2);
  if (config_.safety_critic) {
    losses.s_loss = regress(state_.s_critic, state_.s_opt, input, targets.safety);
  }
  approx::polyak_update(state_.q1_target, state_.q1, config_.tau);
  approx::polyak_update(state_.q2_target, state_.q2, config_.tau);
  if (config_.safety_critic) approx::polyak_update(state_.s_target, state_.s_critic, config_.tau);
  return losses;
}

ActorStats Learner::actor_update(const Batch& batch, const Matrix& noise) {
  const std::size_t n = batch.size();
  const std::size_t ad = action_dim();
  const std::size_t od = obs_dim();
  const double inv_n = 1.0 / static_cast<double>(n);
  const double alpha = state_.alpha();
  const double lambda = state_.lambda;
  const bool with_safety = uses_safety_in_actor();

  approx::PolicyBatch sample;
  approx::policy_sample_batch(state_.actor, batch.obs, noise, sample);
  const Matrix input = critic_input(batch.obs, sample.action);

  approx::MlpTrace t1;
  approx::MlpTrace t2;
  state_.q1.forward(input, t1);
  state_.q2.forward(input, t2);
  approx::MlpTrace ts;
  if (with_safety) state_.s_critic.forward(input, ts);

  // Loss = mean(alpha log pi - min(Q1, Q2) - lambda S); the min routes the
  // gradient through whichever twin is smaller for that row.
  Matrix up1(n, 1);
  Matrix up2(n, 1);
  Matrix ups(n, 1);
  double loss = 0.0;
  for (std::size_t r = 0; r < n; ++r) {
    const double q1 = t1.output()(r, 0);
    const double q2 = t2.output()(r, 0);
    const bool first = q1 <= q2;
    const double min_q = first ? q1 : q2;
    (first ? up1 : up2)(r, 0) = -inv_n;
    double row_loss = alpha * sample.log_prob[r] - min_q;
    if (with_safety) {
      row_loss -= lambda * ts.output()(r, 0);
      ups(r, 0) = -lambda * inv_n;
    }
    loss += row_loss;
  }

  Matrix d_action(n, ad);
  Matrix dx;
  auto add_action_grad = [&](const Mlp& net, const approx::MlpTrace& trace, const Matrix& up) {
    net.backward(trace, up, {}, &dx);
    for (std::size_t r = 0; r < n; ++r) {
      for (std::size_t j = 0; j < ad; ++j) d_action(r, j) += dx(r, od + j);
    }
  };
  add_action_grad(state_.q1, t1, up1);
  add_action_grad(state_.q2, t2, up2);
  if (with_safety) add_action_grad(state_.s_critic, ts, ups);

  const std::vector<double> d_log_prob(n, alpha * inv_n);
  std::vector<double> grad(state_.actor.trunk().num_params(), 0.0);
  approx::policy_backward(state_.actor, sample, d_action, d_log_prob, grad);
  approx::adam_step(state_.actor.trunk().params(), grad, state_.actor_opt);

  return {loss * inv_n, sample.log_prob};
}

ActorStats Learner::actor_update(const Batch& batch) {
  return actor_update(batch, draw_noise(batch.size()));
}

double Learner::lambda_update(const Batch& batch) {
  if (!config_.lambda_learnable) return state_.lambda;
  double signal = 0.0;
  if (config_.lambda_signal == LambdaSignal::stored_margin) {
    signal = mean(batch.safety);
  } else {
    approx::PolicyBatch sample;
    approx::policy_sample_batch(state_.actor, batch.obs, draw_noise(batch.size()), sample);
    approx::MlpTrace ts;
    state_.s_critic.forward(critic_input(batch.obs, sample.action), ts);
    signal = mean(ts.output().data());
  }
  state_.lambda = lambda_step(state_.lambda, signal, config_.lambda_lr);
  return state_.lambda;
}

double Learner::alpha_update(std::span<const double> log_probs) {
  state_.log_alpha =
      log_alpha_step(state_.log_alpha, mean(log_probs), target_entropy(), config_.alpha_lr);
  return state_.alpha();
}

double Learner::alpha_update(const Batch& batch) {
  approx::PolicyBatch sample;
  approx::policy_sample_batch(state_.actor, batch.obs, draw_noise(batch.size()), sample);
  return alpha_update(sample.log_prob);
}

TrainDiagnostics Learner::train_step(ReplayBuffer& buffer) {
  TrainDiagnostics diag;
  diag.lambda = state_.lambda;
  diag.alpha = state_.alpha();
  if (buffer.size() < std::max(config_.warmup, config_.batch_size)) return diag;

  diag.trained = true;
  for (std::size_t k = 0; k < config_.gradient_steps; ++k) {
    const Batch batch = buffer.sample(config_.batch_size);
    const CriticLosses critic = critic_update(batch);
    const ActorStats actor = actor_update(batch);
    lambda_update(batch);
    alpha_update(actor.log_probs);
    diag.q_loss = critic.q_loss;
    diag.s_loss = critic.s_loss;
    diag.actor_loss = actor.loss;
  }
  diag.lambda = state_.lambda;
  diag.alpha = state_.alpha();
  return diag;
}

}  // namespace safewalk::sac
