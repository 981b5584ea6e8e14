#include "safewalk/approx/mlp.hpp"

#include <cmath>

#include "safewalk/error.hpp"

namespace safewalk::approx {

Mlp::Mlp(std::vector<std::size_t> layer_sizes) : sizes_(std::move(layer_sizes)) {
  require(sizes_.size() >= 2, "an Mlp needs at least an input and an output layer");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
    require(sizes_[l] > 0 && sizes_[l + 1] > 0, "layer sizes must be positive");
    offsets_.push_back(total);
    total += sizes_[l] * sizes_[l + 1] + sizes_[l + 1];
  }
  params_.assign(total, 0.0);
}

Mlp Mlp::uniform(std::vector<std::size_t> layer_sizes, std::mt19937_64& rng) {
  Mlp net(std::move(layer_sizes));
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.sizes_[l]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t begin = net.offsets_[l];
    const std::size_t end = net.bias_offset(l) + net.sizes_[l + 1];
    for (std::size_t k = begin; k < end; ++k) net.params_[k] = dist(rng);
  }
  return net;
}

LayerView Mlp::layer(std::size_t l) const {
  const std::size_t in = sizes_[l];
  const std::size_t out = sizes_[l + 1];
  return LayerView{std::span<const double>(params_).subspan(offsets_[l], in * out),
                   std::span<const double>(params_).subspan(bias_offset(l), out), in, out};
}

double Mlp::weight(std::size_t l, std::size_t out, std::size_t in) const {
  return params_[offsets_[l] + in * sizes_[l + 1] + out];
}

void Mlp::set_weight(std::size_t l, std::size_t out, std::size_t in, double value) {
  params_[offsets_[l] + in * sizes_[l + 1] + out] = value;
}

std::span<double> Mlp::bias(std::size_t l) {
  return std::span<double>(params_).subspan(bias_offset(l), sizes_[l + 1]);
}

std::span<const double> Mlp::bias(std::size_t l) const {
  return std::span<const double>(params_).subspan(bias_offset(l), sizes_[l + 1]);
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  require(input.size() == input_size(), "mlp input length mismatch");
  Matrix x(1, input.size());
  std::copy(input.begin(), input.end(), x.row(0).begin());
  MlpTrace trace;
  forward(x, trace);
  auto out = trace.output().row(0);
  return {out.begin(), out.end()};
}

void Mlp::forward(const Matrix& input, MlpTrace& trace) const {
  require(input.cols() == input_size(), "mlp input width mismatch");
  trace.activations.resize(sizes_.size());
  trace.activations[0] = input;
  for (std::size_t l = 0; l < num_layers(); ++l) {
    kernels::affine_forward(layer(l), trace.activations[l], trace.activations[l + 1]);
    if (l + 1 < num_layers()) kernels::relu_inplace(trace.activations[l + 1]);
  }
}

void Mlp::backward(const MlpTrace& trace, const Matrix& upstream, std::span<double> param_grad,
                   Matrix* input_grad) const {
  require(param_grad.empty() || param_grad.size() == params_.size(),
          "parameter gradient size mismatch");
  const bool want_params = !param_grad.empty();
  require(trace.activations.size() == sizes_.size(), "trace does not belong to this network");
  require(upstream.cols() == output_size() && upstream.rows() == trace.output().rows(),
          "upstream gradient shape mismatch");

  Matrix grad = upstream;
  Matrix next;
  for (std::size_t l = num_layers(); l-- > 0;) {
    if (l + 1 < num_layers()) kernels::relu_backward_inplace(trace.activations[l + 1], grad);
    const LayerView view = layer(l);
    if (want_params) {
      kernels::affine_backward_params(view, trace.activations[l], grad,
                                      param_grad.subspan(offsets_[l], view.in * view.out),
                                      param_grad.subspan(bias_offset(l), view.out));
    }
    if (l > 0 || input_grad != nullptr) {
      kernels::affine_backward_input(view, grad, next);
      std::swap(grad, next);
    }
  }
  if (input_grad != nullptr) *input_grad = std::move(grad);
}

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input) {
  return net.forward(input);
}

MlpGradient mlp_gradient(const Mlp& net, std::span<const double> input,
                         std::span<const double> upstream) {
  require(input.size() == net.input_size(), "mlp input length mismatch");
  require(upstream.size() == net.output_size(), "upstream length mismatch");
  Matrix x(1, input.size());
  std::copy(input.begin(), input.end(), x.row(0).begin());
  Matrix up(1, upstream.size());
  std::copy(upstream.begin(), upstream.end(), up.row(0).begin());

  MlpTrace trace;
  net.forward(x, trace);
  MlpGradient g;
  g.params.assign(net.num_params(), 0.0);
  Matrix dx;
  net.backward(trace, up, g.params, &dx);
  g.input.assign(dx.row(0).begin(), dx.row(0).end());
  return g;
}

void polyak_update(Mlp& target, const Mlp& source, double tau) {
  require(target.same_architecture(source), "polyak_update needs identical architectures");
  require(tau >= 0.0 && tau <= 1.0, "tau must lie in [0, 1]");
  auto t = target.params();
  auto s = source.params();
  const double keep = 1.0 - tau;
  for (std::size_t k = 0; k < t.size(); ++k) t[k] = keep * t[k] + tau * s[k];
}

}  // namespace safewalk::approx
