#pragma once

// Dense-layer kernels used by every network in the project.
//
// Weights are stored input-major: element (out o, in i) lives at w[i * out + o].
// That layout keeps the forward pass and the weight-gradient accumulation as
// contiguous axpy loops. Each output element is owned by exactly one thread
// and reduced in a fixed order, so results do not depend on the thread count.

#include <cstddef>
#include <span>

#include "safewalk/approx/matrix.hpp"

namespace safewalk::approx {

struct LayerView {
  std::span<const double> weights;  // in * out, input-major
  std::span<const double> bias;     // out
  std::size_t in = 0;
  std::size_t out = 0;
};

namespace kernels {

/// y = x W^T + b for every row of x.
void affine_forward(const LayerView& layer, const Matrix& x, Matrix& y);

/// Accumulates dW += x^T dy and db += column sums of dy.
void affine_backward_params(const LayerView& layer, const Matrix& x, const Matrix& dy,
                            std::span<double> dweights, std::span<double> dbias);

/// dx = dy W.
void affine_backward_input(const LayerView& layer, const Matrix& dy, Matrix& dx);

void relu_inplace(Matrix& m);

/// Zeroes grad wherever the post-activation is not strictly positive.
void relu_backward_inplace(const Matrix& activation, Matrix& grad);

}  // namespace kernels

// Straightforward single-threaded loops in textbook order. Kept as the
// reference the parallel kernels are tested and benchmarked against.
namespace reference {

void affine_forward(const LayerView& layer, const Matrix& x, Matrix& y);
void affine_backward_params(const LayerView& layer, const Matrix& x, const Matrix& dy,
                            std::span<double> dweights, std::span<double> dbias);
void affine_backward_input(const LayerView& layer, const Matrix& dy, Matrix& dx);

}  // namespace reference

}  // namespace safewalk::approx
