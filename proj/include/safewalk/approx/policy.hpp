#pragma once

#include <span>
#include <vector>

#include "safewalk/approx/matrix.hpp"
#include "safewalk/approx/mlp.hpp"

namespace safewalk::approx {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

/// Tanh-squashed diagonal Gaussian. The trunk emits [mean | log_std] per action
/// dimension; log_std is clamped to [kLogStdMin, kLogStdMax].
class GaussianPolicyHead {
 public:
  GaussianPolicyHead() = default;
  GaussianPolicyHead(Mlp trunk, std::size_t action_dim);

  /// Trunk with the given hidden widths, uniform initialisation.
  static GaussianPolicyHead make(std::size_t obs_dim, std::size_t action_dim,
                                 const std::vector<std::size_t>& hidden, std::mt19937_64& rng);

  std::size_t action_dim() const { return action_dim_; }
  std::size_t obs_dim() const { return trunk_.input_size(); }
  Mlp& trunk() { return trunk_; }
  const Mlp& trunk() const { return trunk_; }

  bool operator==(const GaussianPolicyHead&) const = default;

 private:
  Mlp trunk_;
  std::size_t action_dim_ = 0;
};

struct PolicySample {
  std::vector<double> action;
  double log_prob = 0.0;
};

/// Everything a batched sample needs to be differentiated later.
struct PolicyBatch {
  MlpTrace trace;
  Matrix noise;
  Matrix pre_squash;
  Matrix action;
  Matrix log_std;  // after clamping
  std::vector<double> log_prob;
};

PolicySample policy_sample(const GaussianPolicyHead& head, std::span<const double> obs,
                           std::span<const double> noise);

void policy_sample_batch(const GaussianPolicyHead& head, const Matrix& obs, const Matrix& noise,
                         PolicyBatch& out);

/// Back-propagates d(loss)/d(action) and d(loss)/d(log_prob) (per row) through the
/// reparameterised sample into the trunk parameters (accumulated into param_grad).
void policy_backward(const GaussianPolicyHead& head, const PolicyBatch& batch,
                     const Matrix& d_action, std::span<const double> d_log_prob,
                     std::span<double> param_grad);

/// log(1 - tanh(u)^2) without cancellation for large |u|.
double log_one_minus_tanh_sq(double u);

}  // namespace safewalk::approx
