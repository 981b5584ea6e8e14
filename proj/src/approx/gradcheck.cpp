#include "safewalk/approx/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "safewalk/error.hpp"

namespace safewalk::approx {

namespace {

double contract(const Mlp& net, std::span<const double> input, std::span<const double> upstream) {
  const auto out = net.forward(input);
  return std::inner_product(out.begin(), out.end(), upstream.begin(), 0.0);
}

}  // namespace

MlpGradient numerical_gradient(const Mlp& net, std::span<const double> input,
                               std::span<const double> upstream, double h) {
  require(upstream.size() == net.output_size(), "upstream length mismatch");
  MlpGradient g;
  Mlp probe = net;
  auto params = probe.params();
  g.params.resize(params.size());
  for (std::size_t k = 0; k < params.size(); ++k) {
    const double saved = params[k];
    params[k] = saved + h;
    const double plus = contract(probe, input, upstream);
    params[k] = saved - h;
    const double minus = contract(probe, input, upstream);
    params[k] = saved;
    g.params[k] = (plus - minus) / (2.0 * h);
  }
  std::vector<double> x(input.begin(), input.end());
  g.input.resize(x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double saved = x[k];
    x[k] = saved + h;
    const double plus = contract(net, x, upstream);
    x[k] = saved - h;
    const double minus = contract(net, x, upstream);
    x[k] = saved;
    g.input[k] = (plus - minus) / (2.0 * h);
  }
  return g;
}

double gradient_relative_error(std::span<const double> analytic, std::span<const double> numeric) {
  require(analytic.size() == numeric.size(), "gradient length mismatch");
  double worst = 0.0;
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    const double denom = std::max(std::abs(numeric[k]), 1e-6);
    worst = std::max(worst, std::abs(analytic[k] - numeric[k]) / denom);
  }
  return worst;
}

double finite_diff_check(const Mlp& net, std::span<const double> input) {
  const std::vector<double> upstream(net.output_size(), 1.0);
  const MlpGradient analytic = mlp_gradient(net, input, upstream);
  const MlpGradient numeric = numerical_gradient(net, input, upstream);
  return std::max(gradient_relative_error(analytic.params, numeric.params),
                  gradient_relative_error(analytic.input, numeric.input));
}

double min_hidden_preactivation(const Mlp& net, std::span<const double> input) {
  require(input.size() == net.input_size(), "mlp input length mismatch");
  std::vector<double> act(input.begin(), input.end());
  double smallest = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l + 1 < net.num_layers(); ++l) {
    const LayerView view = net.layer(l);
    std::vector<double> next(view.out);
    for (std::size_t o = 0; o < view.out; ++o) {
      double z = view.bias[o];
      for (std::size_t i = 0; i < view.in; ++i) z += view.weights[i * view.out + o] * act[i];
      smallest = std::min(smallest, std::abs(z));
      next[o] = std::max(z, 0.0);
    }
    act = std::move(next);
  }
  return smallest;
}

}  // namespace safewalk::approx
