#include "safewalk/approx/kernels.hpp"

#include "safewalk/error.hpp"

namespace safewalk::approx::reference {

namespace {
double weight(const LayerView& layer, std::size_t o, std::size_t i) {
  return layer.weights[i * layer.out + o];
}
}  // namespace

void affine_forward(const LayerView& layer, const Matrix& x, Matrix& y) {
  require(x.cols() == layer.in, "layer input width mismatch");
  y.resize(x.rows(), layer.out);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t o = 0; o < layer.out; ++o) {
      double acc = layer.bias[o];
      for (std::size_t i = 0; i < layer.in; ++i) acc += weight(layer, o, i) * x(r, i);
      y(r, o) = acc;
    }
  }
}

void affine_backward_params(const LayerView& layer, const Matrix& x, const Matrix& dy,
                            std::span<double> dweights, std::span<double> dbias) {
  for (std::size_t o = 0; o < layer.out; ++o) {
    for (std::size_t i = 0; i < layer.in; ++i) {
      double acc = 0.0;
      for (std::size_t r = 0; r < x.rows(); ++r) acc += dy(r, o) * x(r, i);
      dweights[i * layer.out + o] += acc;
    }
    double acc = 0.0;
    for (std::size_t r = 0; r < x.rows(); ++r) acc += dy(r, o);
    dbias[o] += acc;
  }
}

void affine_backward_input(const LayerView& layer, const Matrix& dy, Matrix& dx) {
  dx.resize(dy.rows(), layer.in);
  for (std::size_t r = 0; r < dy.rows(); ++r) {
    for (std::size_t i = 0; i < layer.in; ++i) {
      double acc = 0.0;
      for (std::size_t o = 0; o < layer.out; ++o) acc += weight(layer, o, i) * dy(r, o);
      dx(r, i) = acc;
    }
  }
}

}  // namespace safewalk::approx::reference
