#pragma once

#include <span>
#include <vector>

#include "safewalk/approx/mlp.hpp"

namespace safewalk::approx {

inline constexpr double kFiniteDiffStep = 1e-5;

/// Central-difference gradient of upstream . net(input), parameters then input.
MlpGradient numerical_gradient(const Mlp& net, std::span<const double> input,
                               std::span<const double> upstream, double h = kFiniteDiffStep);

/// max_k |analytic_k - numeric_k| / max(|numeric_k|, 1e-6).
double gradient_relative_error(std::span<const double> analytic, std::span<const double> numeric);

/// Worst relative deviation between mlp_gradient and central differences for an
/// all-ones upstream, over every parameter and input component.
double finite_diff_check(const Mlp& net, std::span<const double> input);

/// Smallest |pre-activation| over hidden units; central differences are only
/// meaningful when this is well above the step size.
double min_hidden_preactivation(const Mlp& net, std::span<const double> input);

}  // namespace safewalk::approx
