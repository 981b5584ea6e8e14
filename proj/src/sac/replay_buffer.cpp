#include "safewalk/sac/replay_buffer.hpp"

#include <algorithm>
#include <cmath>

#include "safewalk/error.hpp"

namespace safewalk::sac {

std::string to_string(TerminationKind kind) {
  switch (kind) {
    case TerminationKind::running:
      return "running";
    case TerminationKind::fall_terminal:
      return "fall_terminal";
    case TerminationKind::boundary_timeout:
      return "boundary_timeout";
    case TerminationKind::episode_timeout:
      return "episode_timeout";
  }
  return "unknown";
}

Batch Batch::from(std::span<const Transition> transitions) {
  Batch b;
  if (transitions.empty()) return b;
  const std::size_t n = transitions.size();
  const std::size_t od = transitions.front().obs.size();
  const std::size_t ad = transitions.front().action.size();
  b.obs.resize(n, od);
  b.action.resize(n, ad);
  b.next_obs.resize(n, od);
  for (std::size_t r = 0; r < n; ++r) {
    const Transition& t = transitions[r];
    require(t.obs.size() == od && t.next_obs.size() == od && t.action.size() == ad,
            "batch transitions must share dimensions");
    std::copy(t.obs.begin(), t.obs.end(), b.obs.row(r).begin());
    std::copy(t.action.begin(), t.action.end(), b.action.row(r).begin());
    std::copy(t.next_obs.begin(), t.next_obs.end(), b.next_obs.row(r).begin());
    b.reward.push_back(t.reward);
    b.safety.push_back(t.safety);
    b.kind.push_back(t.kind);
  }
  return b;
}

ReplayBuffer::ReplayBuffer(std::size_t obs_dim, std::size_t action_dim, std::size_t capacity,
                           std::uint64_t seed)
    : obs_dim_(obs_dim), action_dim_(action_dim), capacity_(capacity), rng_(seed) {
  require(capacity_ > 0, "replay capacity must be positive");
}

std::size_t ReplayBuffer::slot_of(std::size_t i) const {
  return size_ < capacity_ ? i : (head_ + i) % capacity_;
}

void ReplayBuffer::add(const Transition& t) {
  require(t.obs.size() == obs_dim_ && t.next_obs.size() == obs_dim_, "transition obs length");
  require(t.action.size() == action_dim_, "transition action length");
  require(std::isfinite(t.reward) && std::isfinite(t.safety), "reward and safety must be finite");
  require(t.kind != TerminationKind::fall_terminal || t.safety < 0.0,
          "fall_terminal transitions must carry a negative safety margin");

  if (size_ < capacity_) {
    obs_.insert(obs_.end(), t.obs.begin(), t.obs.end());
    action_.insert(action_.end(), t.action.begin(), t.action.end());
    next_obs_.insert(next_obs_.end(), t.next_obs.begin(), t.next_obs.end());
    reward_.push_back(t.reward);
    safety_.push_back(t.safety);
    kind_.push_back(t.kind);
    ++size_;
    return;
  }
  const std::size_t slot = head_;
  std::copy(t.obs.begin(), t.obs.end(), obs_.begin() + slot * obs_dim_);
  std::copy(t.action.begin(), t.action.end(), action_.begin() + slot * action_dim_);
  std::copy(t.next_obs.begin(), t.next_obs.end(), next_obs_.begin() + slot * obs_dim_);
  reward_[slot] = t.reward;
  safety_[slot] = t.safety;
  kind_[slot] = t.kind;
  head_ = (head_ + 1) % capacity_;
}

Transition ReplayBuffer::at(std::size_t i) const {
  require(i < size_, "replay index out of range");
  const std::size_t s = slot_of(i);
  Transition t;
  t.obs.assign(obs_.begin() + s * obs_dim_, obs_.begin() + (s + 1) * obs_dim_);
  t.action.assign(action_.begin() + s * action_dim_, action_.begin() + (s + 1) * action_dim_);
  t.next_obs.assign(next_obs_.begin() + s * obs_dim_, next_obs_.begin() + (s + 1) * obs_dim_);
  t.reward = reward_[s];
  t.safety = safety_[s];
  t.kind = kind_[s];
  return t;
}

Batch ReplayBuffer::sample(std::size_t batch_size) {
  require(batch_size > 0 && size_ >= batch_size, "not enough transitions to sample a batch");
  std::uniform_int_distribution<std::size_t> pick(0, size_ - 1);
  Batch b;
  b.obs.resize(batch_size, obs_dim_);
  b.action.resize(batch_size, action_dim_);
  b.next_obs.resize(batch_size, obs_dim_);
  b.reward.resize(batch_size);
  b.safety.resize(batch_size);
  b.kind.resize(batch_size);
  for (std::size_t r = 0; r < batch_size; ++r) {
    const std::size_t s = pick(rng_);
    std::copy_n(obs_.begin() + s * obs_dim_, obs_dim_, b.obs.row(r).begin());
    std::copy_n(action_.begin() + s * action_dim_, action_dim_, b.action.row(r).begin());
    std::copy_n(next_obs_.begin() + s * obs_dim_, obs_dim_, b.next_obs.row(r).begin());
    b.reward[r] = reward_[s];
    b.safety[r] = safety_[s];
    b.kind[r] = kind_[s];
  }
  return b;
}

}  // namespace safewalk::sac
