#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace safewalk::approx {

inline constexpr double kDefaultLearningRate = 3e-4;

struct AdamState {
  AdamState() = default;
  explicit AdamState(std::size_t num_params, double lr = kDefaultLearningRate)
      : first_moment(num_params, 0.0), second_moment(num_params, 0.0), learning_rate(lr) {}

  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step_count = 0;
  double learning_rate = kDefaultLearningRate;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamState&) const = default;
};

/// One bias-corrected Adam update of params in place.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state);

}  // namespace safewalk::approx
