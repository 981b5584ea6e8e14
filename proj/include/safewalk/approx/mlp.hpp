#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "safewalk/approx/kernels.hpp"
#include "safewalk/approx/matrix.hpp"

namespace safewalk::approx {

inline constexpr std::size_t kDefaultHidden = 256;

/// Intermediate activations kept from a batched forward pass for backward.
struct MlpTrace {
  std::vector<Matrix> activations;  // [0] is the input, back() the output
  const Matrix& output() const { return activations.back(); }
};

/// Fully connected network: ReLU on hidden layers, identity on the output.
///
/// All parameters live in one flat buffer, layer by layer, weights first.
/// Weight (o, i) of a layer sits at offset i * out + o inside that layer's block.
class Mlp {
 public:
  Mlp() = default;
  /// Zero-initialised network.
  explicit Mlp(std::vector<std::size_t> layer_sizes);

  /// Weights and biases uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static Mlp uniform(std::vector<std::size_t> layer_sizes, std::mt19937_64& rng);

  const std::vector<std::size_t>& layer_sizes() const { return sizes_; }
  std::size_t num_layers() const { return sizes_.empty() ? 0 : sizes_.size() - 1; }
  std::size_t input_size() const { return sizes_.front(); }
  std::size_t output_size() const { return sizes_.back(); }
  std::size_t num_params() const { return params_.size(); }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  LayerView layer(std::size_t l) const;
  double weight(std::size_t l, std::size_t out, std::size_t in) const;
  void set_weight(std::size_t l, std::size_t out, std::size_t in, double value);
  std::span<double> bias(std::size_t l);
  std::span<const double> bias(std::size_t l) const;
  /// Offset of layer l's weight block inside params().
  std::size_t weight_offset(std::size_t l) const { return offsets_[l]; }
  std::size_t bias_offset(std::size_t l) const { return offsets_[l] + sizes_[l] * sizes_[l + 1]; }

  std::vector<double> forward(std::span<const double> input) const;
  void forward(const Matrix& input, MlpTrace& trace) const;

  /// Accumulates d(sum upstream . output)/d(params) into param_grad and, when
  /// input_grad is non-null, writes the gradient with respect to the input.
  /// An empty param_grad skips the parameter gradients entirely.
  void backward(const MlpTrace& trace, const Matrix& upstream, std::span<double> param_grad,
                Matrix* input_grad) const;

  bool same_architecture(const Mlp& other) const { return sizes_ == other.sizes_; }
  bool operator==(const Mlp&) const = default;

 private:
  std::vector<std::size_t> sizes_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

struct MlpGradient {
  std::vector<double> params;
  std::vector<double> input;
};

std::vector<double> mlp_forward(const Mlp& net, std::span<const double> input);
MlpGradient mlp_gradient(const Mlp& net, std::span<const double> input,
                         std::span<const double> upstream);

/// target <- (1 - tau) * target + tau * source, parameter-wise.
void polyak_update(Mlp& target, const Mlp& source, double tau);

}  // namespace safewalk::approx
