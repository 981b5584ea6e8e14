#include "safewalk/approx/adam.hpp"

#include <cmath>

#include "safewalk/error.hpp"

namespace safewalk::approx {

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state) {
  require(params.size() == grads.size(), "adam: parameter/gradient size mismatch");
  require(state.first_moment.size() == params.size() &&
              state.second_moment.size() == params.size(),
          "adam: state does not match parameter count");

  ++state.step_count;
  const double t = static_cast<double>(state.step_count);
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double correction1 = 1.0 - std::pow(b1, t);
  const double correction2 = 1.0 - std::pow(b2, t);
  const double lr = state.learning_rate;
  const double eps = state.epsilon;
  double* m = state.first_moment.data();
  double* v = state.second_moment.data();
  double* p = params.data();
  const double* g = grads.data();

#pragma omp simd
  for (std::size_t k = 0; k < params.size(); ++k) {
    m[k] = b1 * m[k] + (1.0 - b1) * g[k];
    v[k] = b2 * v[k] + (1.0 - b2) * g[k] * g[k];
    const double m_hat = m[k] / correction1;
    const double v_hat = v[k] / correction2;
    p[k] -= lr * m_hat / (std::sqrt(v_hat) + eps);
  }
}

}  // namespace safewalk::approx
