#include "safewalk/approx/kernels.hpp"

#include <algorithm>

#include "safewalk/error.hpp"

namespace safewalk::approx::kernels {

namespace {

// Below this many multiply-adds the fork/join overhead dominates.
constexpr std::size_t kParallelThreshold = 1u << 15;

void check_shapes(const LayerView& layer, const Matrix& x) {
  require(layer.weights.size() == layer.in * layer.out, "layer weight size mismatch");
  require(layer.bias.size() == layer.out, "layer bias size mismatch");
  require(x.cols() == layer.in, "layer input width mismatch");
}

}  // namespace

void affine_forward(const LayerView& layer, const Matrix& x, Matrix& y) {
  check_shapes(layer, x);
  const std::size_t batch = x.rows();
  const std::size_t in = layer.in;
  const std::size_t out = layer.out;
  if (y.rows() != batch || y.cols() != out) y.resize(batch, out);
  const double* w = layer.weights.data();
  const double* b = layer.bias.data();
  const bool parallel = batch * in * out >= kParallelThreshold;

#pragma omp parallel for schedule(static) if (parallel)
  for (std::size_t r = 0; r < batch; ++r) {
    double* yr = y.row(r).data();
    const double* xr = x.row(r).data();
    std::copy(b, b + out, yr);
    for (std::size_t i = 0; i < in; ++i) {
      const double xi = xr[i];
      const double* wi = w + i * out;
#pragma omp simd
      for (std::size_t o = 0; o < out; ++o) yr[o] += wi[o] * xi;
    }
  }
}

void affine_backward_params(const LayerView& layer, const Matrix& x, const Matrix& dy,
                            std::span<double> dweights, std::span<double> dbias) {
  check_shapes(layer, x);
  const std::size_t batch = x.rows();
  const std::size_t in = layer.in;
  const std::size_t out = layer.out;
  require(dy.rows() == batch && dy.cols() == out, "upstream gradient shape mismatch");
  require(dweights.size() == in * out && dbias.size() == out, "gradient buffer size mismatch");
  double* dw = dweights.data();
  const bool parallel = batch * in * out >= kParallelThreshold;

  // Each thread owns whole input rows of dW; the batch is summed in order.
#pragma omp parallel for schedule(static) if (parallel)
  for (std::size_t i = 0; i < in; ++i) {
    double* dwi = dw + i * out;
    for (std::size_t r = 0; r < batch; ++r) {
      const double xi = x(r, i);
      const double* dyr = dy.row(r).data();
#pragma omp simd
      for (std::size_t o = 0; o < out; ++o) dwi[o] += xi * dyr[o];
    }
  }

  double* db = dbias.data();
  for (std::size_t r = 0; r < batch; ++r) {
    const double* dyr = dy.row(r).data();
#pragma omp simd
    for (std::size_t o = 0; o < out; ++o) db[o] += dyr[o];
  }
}

void affine_backward_input(const LayerView& layer, const Matrix& dy, Matrix& dx) {
  const std::size_t batch = dy.rows();
  const std::size_t in = layer.in;
  const std::size_t out = layer.out;
  require(dy.cols() == out, "upstream gradient width mismatch");
  require(layer.weights.size() == in * out, "layer weight size mismatch");
  if (dx.rows() != batch || dx.cols() != in) dx.resize(batch, in);
  const double* w = layer.weights.data();
  const bool parallel = batch * in * out >= kParallelThreshold;

#pragma omp parallel for schedule(static) if (parallel)
  for (std::size_t r = 0; r < batch; ++r) {
    const double* dyr = dy.row(r).data();
    double* dxr = dx.row(r).data();
    for (std::size_t i = 0; i < in; ++i) {
      const double* wi = w + i * out;
      double acc = 0.0;
#pragma omp simd reduction(+ : acc)
      for (std::size_t o = 0; o < out; ++o) acc += wi[o] * dyr[o];
      dxr[i] = acc;
    }
  }
}

void relu_inplace(Matrix& m) {
  for (double& v : m.data()) v = v > 0.0 ? v : 0.0;
}

void relu_backward_inplace(const Matrix& activation, Matrix& grad) {
  require(activation.rows() == grad.rows() && activation.cols() == grad.cols(),
          "relu gradient shape mismatch");
  auto a = activation.data();
  auto g = grad.data();
  for (std::size_t k = 0; k < g.size(); ++k) {
    if (!(a[k] > 0.0)) g[k] = 0.0;
  }
}

}  // namespace safewalk::approx::kernels
