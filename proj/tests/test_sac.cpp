#include <cmath>
#include <limits>
#include <random>

#include "doctest.h"
#include "safewalk/error.hpp"
#include "safewalk/sac/learner.hpp"
#include "safewalk/sac/replay_buffer.hpp"

using namespace safewalk;
using namespace safewalk::sac;
using approx::Matrix;

namespace {

SacConfig small_config() {
  SacConfig c;
  c.hidden = {16, 16};
  c.batch_size = 32;
  c.warmup = 64;
  return c;
}

Transition random_transition(std::size_t obs_dim, std::size_t act_dim, std::mt19937_64& rng,
                             TerminationKind kind = TerminationKind::running) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Transition t;
  for (std::size_t k = 0; k < obs_dim; ++k) {
    t.obs.push_back(unit(rng));
    t.next_obs.push_back(unit(rng));
  }
  for (std::size_t k = 0; k < act_dim; ++k) t.action.push_back(0.99 * unit(rng));
  t.reward = unit(rng);
  t.kind = kind;
  t.safety = kind == TerminationKind::fall_terminal ? -0.05 : 0.1 + 0.1 * unit(rng);
  return t;
}

Batch random_batch(std::size_t n, std::size_t obs_dim, std::size_t act_dim, std::mt19937_64& rng) {
  std::vector<Transition> ts;
  const TerminationKind kinds[4] = {TerminationKind::running, TerminationKind::fall_terminal,
                                    TerminationKind::boundary_timeout, TerminationKind::episode_timeout};
  for (std::size_t k = 0; k < n; ++k) ts.push_back(random_transition(obs_dim, act_dim, rng, kinds[k % 4]));
  return Batch::from(ts);
}

Matrix random_noise(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  std::normal_distribution<double> normal;
  for (double& v : m.data()) v = normal(rng);
  return m;
}

double prediction(const approx::Mlp& net, const Batch& batch, std::size_t r) {
  std::vector<double> x(batch.obs.row(r).begin(), batch.obs.row(r).end());
  x.insert(x.end(), batch.action.row(r).begin(), batch.action.row(r).end());
  return approx::mlp_forward(net, x)[0];
}

}  // namespace

TEST_CASE("q_backup") {
  CHECK(q_backup(-0.05, TerminationKind::fall_terminal, 0.99, 123.0) == -0.05);
  CHECK(q_backup(0.1, TerminationKind::boundary_timeout, 0.99, 2.0 + 0.1) == doctest::Approx(2.179).epsilon(1e-14));
  CHECK(q_backup(0.1, TerminationKind::episode_timeout, 0.99, 2.1) == q_backup(0.1, TerminationKind::running, 0.99, 2.1));
  for (auto kind : {TerminationKind::running, TerminationKind::fall_terminal, TerminationKind::boundary_timeout,
                    TerminationKind::episode_timeout}) {
    CHECK(q_backup(0.7, kind, 0.0, 55.0) == 0.7);
    CHECK(safety_backup(0.2, kind, 0.0, 55.0) == 0.2);
  }
}

TEST_CASE("safety_backup") {
  CHECK(safety_backup(-0.1, TerminationKind::fall_terminal, 0.99, 5.0) == -0.1);
  CHECK(safety_backup(0.2, TerminationKind::running, 0.99, 1.0) == doctest::Approx(1.19).epsilon(1e-14));
  const double margin = 0.15;
  const double fixed = margin / (1.0 - 0.99);
  CHECK(safety_backup(margin, TerminationKind::running, 0.99, fixed) == doctest::Approx(fixed).epsilon(1e-14));
}

TEST_CASE("termination swap changes targets by exactly the bootstrap term") {
  std::mt19937_64 rng(1);
  SacConfig config = small_config();
  Learner learner(config, 6, 2, 5);
  learner.state().log_alpha = std::log(0.3);
  Batch batch = random_batch(64, 6, 2, rng);
  for (std::size_t r = 0; r < batch.size(); ++r) {
    batch.kind[r] = TerminationKind::boundary_timeout;
    batch.safety[r] = -0.01 - 0.1 * std::abs(batch.reward[r]);
  }
  const Matrix noise = random_noise(64, 2, rng);
  const Targets bootstrapped = learner.compute_targets(batch, noise);
  Batch swapped = batch;
  for (auto& k : swapped.kind) k = TerminationKind::fall_terminal;
  const Targets terminal = learner.compute_targets(swapped, noise);
  const double alpha = learner.state().alpha();
  for (std::size_t r = 0; r < batch.size(); ++r) {
    const double bootstrap = 0.99 * (bootstrapped.next_min_q[r] - alpha * bootstrapped.next_log_prob[r]);
    CHECK(bootstrapped.q[r] - terminal.q[r] == doctest::Approx(bootstrap).epsilon(1e-12));
    CHECK(terminal.q[r] == batch.reward[r]);
    CHECK(bootstrapped.safety[r] - terminal.safety[r] ==
          doctest::Approx(0.99 * bootstrapped.next_safety[r]).epsilon(1e-12));
    CHECK(terminal.safety[r] == batch.safety[r]);
  }
}

TEST_CASE("critic_update") {
  std::mt19937_64 rng(2);
  SUBCASE("zero residual leaves parameters unchanged") {
    SacConfig config = small_config();
    config.gamma = 0.0;
    Learner learner(config, 4, 2, 3);
    auto& s = learner.state();
    s.q2 = s.q1;
    s.q2_target = s.q1_target;
    Batch batch = random_batch(32, 4, 2, rng);
    for (std::size_t r = 0; r < batch.size(); ++r) {
      batch.reward[r] = prediction(s.q1, batch, r);
      batch.safety[r] = prediction(s.s_critic, batch, r);
      batch.kind[r] = TerminationKind::running;
    }
    const LearnerState before = s;
    const auto losses = learner.critic_update(batch);
    CHECK(losses.q_loss == 0.0);
    CHECK(losses.s_loss == 0.0);
    CHECK(s.q1 == before.q1);
    CHECK(s.q2 == before.q2);
    CHECK(s.s_critic == before.s_critic);
    // Blending a target toward an identical source only moves it by rounding.
    for (std::size_t k = 0; k < s.q1_target.num_params(); ++k) {
      CHECK(s.q1_target.params()[k] == doctest::Approx(before.q1_target.params()[k]).epsilon(1e-15));
    }
    CHECK(s.q1_opt.step_count == 1);
  }
  SUBCASE("constant-target regression loss decreases") {
    SacConfig config = small_config();
    config.gamma = 0.0;
    Learner learner(config, 4, 2, 4);
    Batch batch = random_batch(32, 4, 2, rng);
    for (auto& r : batch.reward) r = 1.5;
    for (auto& s : batch.safety) s = 0.25;
    double last_q = std::numeric_limits<double>::infinity();
    double last_s = last_q;
    for (int k = 0; k < 50; ++k) {
      const auto losses = learner.critic_update(batch);
      CHECK(std::isfinite(losses.q_loss));
      CHECK(losses.q_loss < last_q);
      CHECK(losses.s_loss < last_s);
      last_q = losses.q_loss;
      last_s = losses.s_loss;
    }
  }
}

TEST_CASE("actor_update") {
  std::mt19937_64 rng(3);
  SUBCASE("lambda = 0, alpha = 0 is pure Q maximisation") {
    SacConfig config = small_config();
    Learner with_safety(config, 4, 2, 9);
    config.safety_critic = false;
    Learner without(config, 4, 2, 9);
    for (Learner* l : {&with_safety, &without}) {
      l->state().lambda = 0.0;
      l->state().log_alpha = -std::numeric_limits<double>::infinity();
    }
    const Batch batch = random_batch(32, 4, 2, rng);
    const Matrix noise = random_noise(32, 2, rng);
    const auto a = with_safety.actor_update(batch, noise);
    const auto b = without.actor_update(batch, noise);
    CHECK(a.loss == b.loss);
    CHECK(with_safety.state().actor == without.state().actor);
  }
  SUBCASE("a large multiplier on a magnitude-penalising safety critic shrinks actions") {
    SacConfig config;
    config.hidden = {2};
    Learner learner(config, 1, 1, 0);
    auto& s = learner.state();
    // Reward critics are identically zero.
    s.q1 = approx::Mlp({2, 2, 1});
    s.q2 = s.q1;
    // S(s, a) = -relu(a) - relu(-a) = -|a|.
    s.s_critic = approx::Mlp({2, 2, 1});
    s.s_critic.set_weight(0, 0, 1, 1.0);
    s.s_critic.set_weight(0, 1, 1, -1.0);
    s.s_critic.set_weight(1, 0, 0, -1.0);
    s.s_critic.set_weight(1, 0, 1, -1.0);
    // Policy mean = 0.8 * relu(obs), log-std = -2.
    approx::Mlp trunk({1, 2, 2});
    trunk.set_weight(0, 0, 0, 1.0);
    trunk.set_weight(1, 0, 0, 0.8);
    trunk.bias(1)[1] = -2.0;
    s.actor = approx::GaussianPolicyHead(trunk, 1);
    s.actor_opt = approx::AdamState(trunk.num_params(), 0.01);
    s.lambda = 100.0;
    s.log_alpha = -std::numeric_limits<double>::infinity();

    std::vector<Transition> ts(8);
    for (auto& t : ts) {
      t.obs = {1.0};
      t.next_obs = {1.0};
      t.action = {0.0};
      t.safety = 0.2;
    }
    const Batch batch = Batch::from(ts);
    const double before = std::abs(learner.act(std::vector<double>{1.0}, true)[0]);
    for (int k = 0; k < 5; ++k) learner.actor_update(batch, random_noise(8, 1, rng));
    const double after = std::abs(learner.act(std::vector<double>{1.0}, true)[0]);
    CHECK(before > 0.5);
    CHECK(after < before);
  }
  SUBCASE("identical seeds and batches give identical actors") {
    Learner a(small_config(), 4, 2, 21);
    Learner b(small_config(), 4, 2, 21);
    const Batch batch = random_batch(32, 4, 2, rng);
    a.critic_update(batch);
    b.critic_update(batch);
    a.actor_update(batch);
    b.actor_update(batch);
    CHECK(a.state() == b.state());
  }
}

TEST_CASE("lambda_update") {
  CHECK(lambda_step(1.0, -0.1, 0.01) == doctest::Approx(1.001).epsilon(1e-15));
  CHECK(lambda_step(0.001, 0.2, 0.01) == 0.0);
  CHECK(lambda_step(0.7, 0.0, 0.01) == 0.7);

  SUBCASE("multiplier responds against the mean margin and stays non-negative") {
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> margin(-0.3, 0.3);
    std::uniform_int_distribution<int> shift(-1, 1);
    SacConfig config = small_config();
    Learner learner(config, 2, 1, 0);
    std::vector<Transition> ts(16);
    for (auto& t : ts) {
      t.obs = {0.0, 0.0};
      t.next_obs = {0.0, 0.0};
      t.action = {0.0};
    }
    int unclamped = 0;
    for (int k = 0; k < 10000; ++k) {
      // Shift margins so the mean is sometimes exactly zero, mostly positive or negative.
      const int direction = shift(rng);
      double sum = 0.0;
      for (auto& t : ts) {
        t.safety = direction == 0 ? 0.0 : direction * std::abs(margin(rng));
        sum += t.safety;
      }
      Batch batch = Batch::from(ts);
      const double before = learner.state().lambda;
      const double after = learner.lambda_update(batch);
      CHECK(after >= 0.0);
      const double mean = sum / ts.size();
      if (after > 0.0) {
        ++unclamped;
        const double delta = after - before;
        CHECK((delta > 0.0) - (delta < 0.0) == -((mean > 0.0) - (mean < 0.0)));
      }
    }
    CHECK(unclamped > 1000);
  }
  SUBCASE("fixed multiplier ignores the batch") {
    SacConfig config = small_config();
    config.lambda_learnable = false;
    config.lambda_init = 0.0;
    Learner learner(config, 2, 1, 0);
    std::mt19937_64 rng(5);
    CHECK(learner.lambda_update(random_batch(8, 2, 1, rng)) == 0.0);
  }
}

TEST_CASE("alpha_update") {
  Learner learner(small_config(), 2, 4, 0);
  const double a0 = learner.state().alpha();
  CHECK(learner.target_entropy() == -4.0);
  // Entropy -mean(log pi) above the target means log pi below 4.
  CHECK(learner.alpha_update(std::vector<double>{1.0, 2.0}) < a0);
  const double a1 = learner.state().alpha();
  CHECK(learner.alpha_update(std::vector<double>{6.0, 7.0}) > a1);
  const double a2 = learner.state().alpha();
  CHECK(learner.alpha_update(std::vector<double>{4.0, 4.0}) == a2);
  CHECK(learner.state().alpha() > 0.0);
}

TEST_CASE("train_step") {
  std::mt19937_64 rng(6);
  SacConfig config = small_config();
  Learner learner(config, 4, 2, 1);
  ReplayBuffer buffer(4, 2, 1000, 2);
  for (int k = 0; k < 63; ++k) buffer.add(random_transition(4, 2, rng));
  const LearnerState before = learner.state();
  CHECK_FALSE(learner.train_step(buffer).trained);
  CHECK(learner.state() == before);

  buffer.add(random_transition(4, 2, rng));
  const auto diag = learner.train_step(buffer);
  CHECK(diag.trained);
  const auto& s = learner.state();
  CHECK(s.actor_opt.step_count == 2);
  CHECK(s.q1_opt.step_count == 2);
  CHECK(s.q2_opt.step_count == 2);
  CHECK(s.s_opt.step_count == 2);
  CHECK(diag.lambda >= 0.0);
  CHECK(diag.alpha > 0.0);
}

TEST_CASE("standard SAC is the lambda = 0 term ablation") {
  std::mt19937_64 rng(7);
  SacConfig plain = small_config();
  plain.safety_critic = false;
  plain.lambda_init = 0.0;
  plain.lambda_learnable = false;
  SacConfig pinned = small_config();
  pinned.lambda_init = 0.0;
  pinned.lambda_learnable = false;
  Learner a(plain, 4, 2, 11);
  Learner b(pinned, 4, 2, 11);
  ReplayBuffer ba(4, 2, 1000, 3);
  ReplayBuffer bb(4, 2, 1000, 3);
  for (int k = 0; k < 200; ++k) {
    const auto t = random_transition(4, 2, rng);
    ba.add(t);
    bb.add(t);
  }
  for (int k = 0; k < 10; ++k) {
    a.train_step(ba);
    b.train_step(bb);
  }
  CHECK(a.state().actor == b.state().actor);
  CHECK(a.state().q1 == b.state().q1);
  CHECK(a.state().q2 == b.state().q2);
  CHECK(a.state().log_alpha == b.state().log_alpha);
}

TEST_CASE("replay buffer") {
  std::mt19937_64 rng(8);
  SUBCASE("FIFO eviction") {
    ReplayBuffer buffer(2, 1, 10, 0);
    std::vector<Transition> all;
    for (int k = 0; k < 13; ++k) {
      auto t = random_transition(2, 1, rng);
      t.reward = k;
      all.push_back(t);
      buffer.add(t);
    }
    CHECK(buffer.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) CHECK(buffer.at(i).reward == static_cast<double>(i + 3));
    for (int round = 0; round < 20; ++round) {
      const Batch b = buffer.sample(10);
      for (double r : b.reward) CHECK(r >= 3.0);
    }
  }
  SUBCASE("sampling needs a full batch") {
    ReplayBuffer buffer(2, 1, 10, 0);
    buffer.add(random_transition(2, 1, rng));
    CHECK_THROWS_AS(buffer.sample(2), ContractViolation);
  }
  SUBCASE("records are validated") {
    ReplayBuffer buffer(2, 1, 10, 0);
    auto t = random_transition(2, 1, rng, TerminationKind::fall_terminal);
    t.safety = 0.1;
    CHECK_THROWS_AS(buffer.add(t), ContractViolation);
    t = random_transition(2, 1, rng);
    t.reward = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(buffer.add(t), ContractViolation);
    t = random_transition(3, 1, rng);
    CHECK_THROWS_AS(buffer.add(t), ContractViolation);
  }
  SUBCASE("seeded sampling is reproducible") {
    ReplayBuffer a(2, 1, 50, 4);
    ReplayBuffer b(2, 1, 50, 4);
    for (int k = 0; k < 50; ++k) {
      const auto t = random_transition(2, 1, rng);
      a.add(t);
      b.add(t);
    }
    CHECK(a.sample(16).reward == b.sample(16).reward);
  }
  CHECK(to_string(TerminationKind::boundary_timeout) == "boundary_timeout");
  CHECK(is_terminal(TerminationKind::fall_terminal));
  CHECK_FALSE(is_terminal(TerminationKind::episode_timeout));
}
