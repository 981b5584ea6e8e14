#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "safewalk/approx/matrix.hpp"

namespace safewalk::sac {

enum class TerminationKind : std::uint8_t {
  running,
  fall_terminal,
  boundary_timeout,
  episode_timeout,
};

std::string to_string(TerminationKind kind);

/// True only for genuine failure states; every other kind bootstraps.
inline bool is_terminal(TerminationKind kind) { return kind == TerminationKind::fall_terminal; }

struct Transition {
  std::vector<double> obs;
  std::vector<double> action;
  double reward = 0.0;
  std::vector<double> next_obs;
  double safety = 0.0;  // margin at the next state
  TerminationKind kind = TerminationKind::running;
};

/// Structure-of-arrays minibatch.
struct Batch {
  approx::Matrix obs;
  approx::Matrix action;
  std::vector<double> reward;
  approx::Matrix next_obs;
  std::vector<double> safety;
  std::vector<TerminationKind> kind;

  std::size_t size() const { return reward.size(); }
  static Batch from(std::span<const Transition> transitions);
};

inline constexpr std::size_t kDefaultCapacity = 100000;

/// Fixed-capacity FIFO ring with uniform sampling from its own generator.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t obs_dim, std::size_t action_dim,
               std::size_t capacity = kDefaultCapacity, std::uint64_t seed = 0);

  /// Throws ContractViolation on wrong lengths, non-finite reward/safety, or a
  /// fall_terminal record with a non-negative margin.
  void add(const Transition& t);

  /// Uniform with replacement. Requires size() >= batch_size.
  Batch sample(std::size_t batch_size);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  /// i-th oldest stored transition.
  Transition at(std::size_t i) const;

  std::mt19937_64& sampler() { return rng_; }
  const std::mt19937_64& sampler() const { return rng_; }

 private:
  std::size_t slot_of(std::size_t i) const;

  std::size_t obs_dim_;
  std::size_t action_dim_;
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::size_t head_ = 0;  // next slot to overwrite once full
  std::vector<double> obs_;
  std::vector<double> action_;
  std::vector<double> reward_;
  std::vector<double> next_obs_;
  std::vector<double> safety_;
  std::vector<TerminationKind> kind_;
  std::mt19937_64 rng_;
};

}  // namespace safewalk::sac
