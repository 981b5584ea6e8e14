#include "safewalk/approx/policy.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "safewalk/error.hpp"

namespace safewalk::approx {

namespace {

const double kHalfLog2Pi = 0.5 * std::log(2.0 * std::numbers::pi);

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

}  // namespace

double log_one_minus_tanh_sq(double u) {
  return 2.0 * (std::numbers::ln2 - u - softplus(-2.0 * u));
}

GaussianPolicyHead::GaussianPolicyHead(Mlp trunk, std::size_t action_dim)
    : trunk_(std::move(trunk)), action_dim_(action_dim) {
  require(action_dim_ > 0, "policy action dimension must be positive");
  require(trunk_.output_size() == 2 * action_dim_,
          "policy trunk must output mean and log-std per action dimension");
}

GaussianPolicyHead GaussianPolicyHead::make(std::size_t obs_dim, std::size_t action_dim,
                                            const std::vector<std::size_t>& hidden,
                                            std::mt19937_64& rng) {
  std::vector<std::size_t> sizes{obs_dim};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(2 * action_dim);
  return GaussianPolicyHead(Mlp::uniform(std::move(sizes), rng), action_dim);
}

void policy_sample_batch(const GaussianPolicyHead& head, const Matrix& obs, const Matrix& noise,
                         PolicyBatch& out) {
  const std::size_t d = head.action_dim();
  require(noise.cols() == d && noise.rows() == obs.rows(), "policy noise shape mismatch");
  head.trunk().forward(obs, out.trace);
  const Matrix& raw = out.trace.output();
  const std::size_t batch = obs.rows();

  out.noise = noise;
  out.pre_squash.resize(batch, d);
  out.action.resize(batch, d);
  out.log_std.resize(batch, d);
  out.log_prob.assign(batch, 0.0);
  for (std::size_t r = 0; r < batch; ++r) {
    double lp = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const double mean = raw(r, j);
      const double log_std = std::clamp(raw(r, d + j), kLogStdMin, kLogStdMax);
      const double eps = noise(r, j);
      const double u = mean + std::exp(log_std) * eps;
      out.log_std(r, j) = log_std;
      out.pre_squash(r, j) = u;
      out.action(r, j) = std::tanh(u);
      lp += -0.5 * eps * eps - log_std - kHalfLog2Pi - log_one_minus_tanh_sq(u);
    }
    out.log_prob[r] = lp;
  }
}

PolicySample policy_sample(const GaussianPolicyHead& head, std::span<const double> obs,
                           std::span<const double> noise) {
  require(obs.size() == head.obs_dim(), "policy observation length mismatch");
  require(noise.size() == head.action_dim(), "policy noise length mismatch");
  Matrix o(1, obs.size());
  std::copy(obs.begin(), obs.end(), o.row(0).begin());
  Matrix n(1, noise.size());
  std::copy(noise.begin(), noise.end(), n.row(0).begin());
  PolicyBatch batch;
  policy_sample_batch(head, o, n, batch);
  auto a = batch.action.row(0);
  return {std::vector<double>(a.begin(), a.end()), batch.log_prob[0]};
}

void policy_backward(const GaussianPolicyHead& head, const PolicyBatch& batch,
                     const Matrix& d_action, std::span<const double> d_log_prob,
                     std::span<double> param_grad) {
  const std::size_t d = head.action_dim();
  const std::size_t rows = batch.action.rows();
  require(d_action.rows() == rows && d_action.cols() == d, "action gradient shape mismatch");
  require(d_log_prob.size() == rows, "log-prob gradient length mismatch");

  const Matrix& raw = batch.trace.output();
  Matrix d_raw(rows, 2 * d);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < d; ++j) {
      const double a = batch.action(r, j);
      // d log_prob / du = 2 tanh(u); d action / du = 1 - tanh(u)^2.
      const double d_u = d_log_prob[r] * 2.0 * a + d_action(r, j) * (1.0 - a * a);
      d_raw(r, j) = d_u;
      const double raw_log_std = raw(r, d + j);
      const bool clamped = raw_log_std < kLogStdMin || raw_log_std > kLogStdMax;
      const double std_dev = std::exp(batch.log_std(r, j));
      d_raw(r, d + j) = clamped ? 0.0 : -d_log_prob[r] + d_u * std_dev * batch.noise(r, j);
    }
  }
  head.trunk().backward(batch.trace, d_raw, param_grad, nullptr);
}

}  // namespace safewalk::approx
