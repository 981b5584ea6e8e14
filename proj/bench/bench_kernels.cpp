#include <benchmark/benchmark.h>

#include <random>

#include "safewalk/approx/kernels.hpp"

using namespace safewalk;
using approx::LayerView;
using approx::Matrix;

namespace {

struct Layer {
  std::vector<double> w, b;
  Matrix x, dy;
  LayerView view() const { return {w, b, x.cols(), dy.cols()}; }
};

Layer make_layer(std::size_t batch, std::size_t in, std::size_t out) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Layer l{std::vector<double>(in * out), std::vector<double>(out), Matrix(batch, in), Matrix(batch, out)};
  for (double& v : l.w) v = u(rng);
  for (double& v : l.b) v = u(rng);
  for (double& v : l.x.data()) v = u(rng);
  for (double& v : l.dy.data()) v = u(rng);
  return l;
}

template <auto Fn>
void forward(benchmark::State& state) {
  const Layer l = make_layer(state.range(0), state.range(1), state.range(2));
  Matrix y(l.x.rows(), l.dy.cols());
  for (auto _ : state) {
    Fn(l.view(), l.x, y);
    benchmark::DoNotOptimize(y.data().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1) * state.range(2));
}

template <auto Fn>
void backward_params(benchmark::State& state) {
  const Layer l = make_layer(state.range(0), state.range(1), state.range(2));
  std::vector<double> dw(l.w.size()), db(l.b.size());
  for (auto _ : state) {
    Fn(l.view(), l.x, l.dy, dw, db);
    benchmark::DoNotOptimize(dw.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1) * state.range(2));
}

template <auto Fn>
void backward_input(benchmark::State& state) {
  const Layer l = make_layer(state.range(0), state.range(1), state.range(2));
  Matrix dx(l.x.rows(), l.x.cols());
  for (auto _ : state) {
    Fn(l.view(), l.dy, dx);
    benchmark::DoNotOptimize(dx.data().data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(1) * state.range(2));
}

// batch, in, out: the default learner's hidden layer and its input layer.
void shapes(benchmark::internal::Benchmark* b) {
  b->Args({256, 256, 256})->Args({256, 52, 256})->Args({64, 64, 64});
}

}  // namespace

BENCHMARK(forward<approx::kernels::affine_forward>)->Apply(shapes);
BENCHMARK(forward<approx::reference::affine_forward>)->Apply(shapes);
BENCHMARK(backward_params<approx::kernels::affine_backward_params>)->Apply(shapes);
BENCHMARK(backward_params<approx::reference::affine_backward_params>)->Apply(shapes);
BENCHMARK(backward_input<approx::kernels::affine_backward_input>)->Apply(shapes);
BENCHMARK(backward_input<approx::reference::affine_backward_input>)->Apply(shapes);

BENCHMARK_MAIN();
