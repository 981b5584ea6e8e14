#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "safewalk/approx/adam.hpp"
#include "safewalk/approx/gradcheck.hpp"
#include "safewalk/approx/kernels.hpp"
#include "safewalk/approx/mlp.hpp"
#include "safewalk/approx/policy.hpp"
#include "safewalk/error.hpp"

using namespace safewalk;
using namespace safewalk::approx;

namespace {

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  std::vector<double> v(n);
  for (double& x : v) x = d(rng);
  return v;
}

Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng) {
  Matrix m(rows, cols);
  std::uniform_real_distribution<double> d(-1.0, 1.0);
  for (double& x : m.data()) x = d(rng);
  return m;
}

}  // namespace

TEST_CASE("mlp_forward: zero network maps everything to zero") {
  Mlp net({3, 5, 2});
  const auto out = mlp_forward(net, std::vector<double>{1.0, -2.0, 3.0});
  CHECK(out == std::vector<double>{0.0, 0.0});
}

TEST_CASE("mlp_forward: single identity layer") {
  Mlp net({3, 3});
  for (std::size_t k = 0; k < 3; ++k) net.set_weight(0, k, k, 1.0);
  const std::vector<double> x{0.5, -1.5, 2.0};
  CHECK(mlp_forward(net, x) == x);
}

TEST_CASE("mlp_forward: 2-4-1 network matches a hand evaluation") {
  Mlp net({2, 4, 1});
  const double w1[4][2] = {{0.5, -0.25}, {-1.0, 0.5}, {0.25, 0.75}, {1.0, 1.0}};
  const double b1[4] = {0.1, 0.2, -0.3, 0.05};
  const double w2[4] = {2.0, -1.0, 3.0, -4.0};
  for (std::size_t h = 0; h < 4; ++h) {
    net.set_weight(0, h, 0, w1[h][0]);
    net.set_weight(0, h, 1, w1[h][1]);
    net.bias(0)[h] = b1[h];
    net.set_weight(1, 0, h, w2[h]);
  }
  net.bias(1)[0] = 0.5;
  // hidden = relu(0.85, -1.3, -0.8, 0.05); out = 0.5 + 2*0.85 - 4*0.05
  CHECK(mlp_forward(net, std::vector<double>{1.0, -1.0})[0] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("mlp_forward: seeded 2-4-1 network matches an explicit affine/ReLU chain") {
  std::mt19937_64 rng(42);
  const Mlp net = Mlp::uniform({2, 4, 1}, rng);
  const double x[2] = {1.0, -1.0};
  double expected = net.bias(1)[0];
  for (std::size_t h = 0; h < 4; ++h) {
    double z = net.bias(0)[h] + net.weight(0, h, 0) * x[0] + net.weight(0, h, 1) * x[1];
    expected += net.weight(1, 0, h) * std::max(z, 0.0);
  }
  CHECK(mlp_forward(net, std::vector<double>{1.0, -1.0})[0] ==
        doctest::Approx(expected).epsilon(1e-14));
}

TEST_CASE("mlp_forward: dimension mismatch is a contract violation") {
  Mlp net({3, 2});
  CHECK_THROWS_AS(mlp_forward(net, std::vector<double>{1.0}), ContractViolation);
  CHECK_THROWS_AS(Mlp(std::vector<std::size_t>{3}), ContractViolation);
}

TEST_CASE("mlp_gradient: linear unit y = w x") {
  Mlp net({1, 1});
  net.set_weight(0, 0, 0, 3.0);
  const auto g = mlp_gradient(net, std::vector<double>{2.0}, std::vector<double>{1.0});
  CHECK(g.params[net.weight_offset(0)] == 2.0);  // dL/dw = x
  CHECK(g.params[net.bias_offset(0)] == 1.0);
  CHECK(g.input[0] == 3.0);
}

TEST_CASE("mlp_gradient: dead ReLU passes no gradient") {
  Mlp net({1, 1, 1});
  net.set_weight(0, 0, 0, 1.0);
  net.bias(0)[0] = -5.0;  // pre-activation -3 for x = 2
  net.set_weight(1, 0, 0, 2.0);
  const auto g = mlp_gradient(net, std::vector<double>{2.0}, std::vector<double>{1.0});
  CHECK(g.params[net.weight_offset(0)] == 0.0);
  CHECK(g.params[net.bias_offset(0)] == 0.0);
  CHECK(g.input[0] == 0.0);
}

TEST_CASE("mlp_gradient: random 2-4-2 net agrees with central differences") {
  std::mt19937_64 rng(7);
  const Mlp net = Mlp::uniform({2, 4, 2}, rng);
  const std::vector<double> x{0.3, -0.7};
  const std::vector<double> up{1.0, -0.5};
  REQUIRE(min_hidden_preactivation(net, x) > 1e-3);
  const auto analytic = mlp_gradient(net, x, up);
  const auto numeric = numerical_gradient(net, x, up);
  CHECK(gradient_relative_error(analytic.params, numeric.params) < 1e-4);
  CHECK(gradient_relative_error(analytic.input, numeric.input) < 1e-4);
  CHECK_THROWS_AS(mlp_gradient(net, x, std::vector<double>{1.0}), ContractViolation);
}

TEST_CASE("finite_diff_check") {
  std::mt19937_64 rng(11);
  SUBCASE("linear net is exact to rounding") {
    const Mlp net = Mlp::uniform({5, 3}, rng);
    CHECK(finite_diff_check(net, random_vector(5, rng)) < 1e-8);
  }
  SUBCASE("default 2x256 network") {
    const Mlp net = Mlp::uniform({12, kDefaultHidden, kDefaultHidden, 3}, rng);
    std::vector<double> x = random_vector(12, rng);
    while (min_hidden_preactivation(net, x) < 1e-4) x = random_vector(12, rng);
    CHECK(finite_diff_check(net, x) < 1e-4);
  }
  SUBCASE("a doubled gradient is flagged") {
    const Mlp net = Mlp::uniform({3, 6, 2}, rng);
    std::vector<double> x{0.2, 0.4, -0.6};
    const std::vector<double> up{1.0, 1.0};
    auto analytic = mlp_gradient(net, x, up);
    for (double& g : analytic.params) g *= 2.0;
    const auto numeric = numerical_gradient(net, x, up);
    CHECK(gradient_relative_error(analytic.params, numeric.params) == doctest::Approx(1.0).epsilon(1e-6));
  }
}

TEST_CASE("gradient exactness property over random architectures") {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> depth(0, 3);
  std::uniform_int_distribution<std::size_t> width(1, 9);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<std::size_t> sizes{width(rng)};
    const std::size_t hidden = depth(rng);
    for (std::size_t h = 0; h < hidden; ++h) sizes.push_back(width(rng));
    sizes.push_back(width(rng));
    const Mlp net = Mlp::uniform(sizes, rng);
    std::vector<double> x = random_vector(sizes.front(), rng);
    while (min_hidden_preactivation(net, x) < 1e-4) x = random_vector(sizes.front(), rng);
    CHECK(finite_diff_check(net, x) < 1e-4);
  }
}

TEST_CASE("parallel kernels agree with the serial reference") {
  std::mt19937_64 rng(5);
  const std::array<std::array<std::size_t, 3>, 4> shapes{{{1, 3, 2}, {17, 52, 64}, {64, 64, 64}, {256, 48, 256}}};
  for (const auto& [batch, in, out] : shapes) {
    const Mlp net = Mlp::uniform({in, out}, rng);
    const LayerView layer = net.layer(0);
    const Matrix x = random_matrix(batch, in, rng);
    const Matrix dy = random_matrix(batch, out, rng);

    Matrix y_fast, y_ref;
    kernels::affine_forward(layer, x, y_fast);
    reference::affine_forward(layer, x, y_ref);
    Matrix dx_fast, dx_ref;
    kernels::affine_backward_input(layer, dy, dx_fast);
    reference::affine_backward_input(layer, dy, dx_ref);
    std::vector<double> dw_fast(in * out), db_fast(out), dw_ref(in * out), db_ref(out);
    kernels::affine_backward_params(layer, x, dy, dw_fast, db_fast);
    reference::affine_backward_params(layer, x, dy, dw_ref, db_ref);

    auto close = [](std::span<const double> a, std::span<const double> b) {
      double worst = 0.0;
      for (std::size_t k = 0; k < a.size(); ++k) worst = std::max(worst, std::abs(a[k] - b[k]));
      return worst;
    };
    CHECK(close(y_fast.data(), y_ref.data()) < 1e-12);
    CHECK(close(dx_fast.data(), dx_ref.data()) < 1e-12);
    CHECK(close(dw_fast, dw_ref) < 1e-12);
    CHECK(close(db_fast, db_ref) < 1e-12);
  }
}

TEST_CASE("forward, gradient and Adam are bit-reproducible") {
  auto run = [] {
    std::mt19937_64 rng(99);
    Mlp net = Mlp::uniform({6, 32, 32, 2}, rng);
    AdamState opt(net.num_params());
    const std::vector<double> x = random_vector(6, rng);
    for (int k = 0; k < 5; ++k) {
      const auto g = mlp_gradient(net, x, std::vector<double>{1.0, -1.0});
      adam_step(net.params(), g.params, opt);
    }
    return std::pair{net, opt};
  };
  const auto a = run();
  const auto b = run();
  CHECK(a.first == b.first);
  CHECK(a.second == b.second);
}

TEST_CASE("adam_step") {
  SUBCASE("zero gradient from rest leaves parameters alone") {
    std::vector<double> p{1.0, -2.0};
    AdamState s(2);
    adam_step(p, std::vector<double>{0.0, 0.0}, s);
    CHECK(p == std::vector<double>{1.0, -2.0});
    CHECK(s.step_count == 1);
  }
  SUBCASE("zero gradient decays existing moments") {
    std::vector<double> p{1.0};
    AdamState s(1);
    adam_step(p, std::vector<double>{3.0}, s);
    const double m = s.first_moment[0];
    const double v = s.second_moment[0];
    adam_step(p, std::vector<double>{0.0}, s);
    CHECK(std::abs(s.first_moment[0]) < std::abs(m));
    CHECK(s.second_moment[0] < v);
    CHECK(s.second_moment[0] >= 0.0);
  }
  SUBCASE("first step moves by lr against the gradient sign") {
    for (double g : {5.0, -0.01}) {
      std::vector<double> p{0.0};
      AdamState s(1, 0.001);
      adam_step(p, std::vector<double>{g}, s);
      CHECK(p[0] == doctest::Approx(-0.001 * (g > 0 ? 1.0 : -1.0)).epsilon(1e-5));
    }
  }
  SUBCASE("two steps on w^2 follow the recurrence") {
    // Frozen from an independent step-by-step evaluation of the Adam recurrences.
    std::vector<double> w{1.0};
    AdamState s(1, 0.1);
    adam_step(w, std::vector<double>{2.0 * w[0]}, s);
    CHECK(w[0] == doctest::Approx(0.9000000005).epsilon(1e-14));
    adam_step(w, std::vector<double>{2.0 * w[0]}, s);
    CHECK(w[0] == doctest::Approx(0.8004122286917928).epsilon(1e-14));
    CHECK(s.first_moment[0] == doctest::Approx(0.3600000000999999).epsilon(1e-14));
    CHECK(s.second_moment[0] == doctest::Approx(0.007236000003600007).epsilon(1e-14));
    CHECK(s.step_count == 2);
  }
  SUBCASE("shape mismatch") {
    std::vector<double> p{1.0};
    AdamState s(2);
    CHECK_THROWS_AS(adam_step(p, std::vector<double>{0.0}, s), ContractViolation);
  }
}

TEST_CASE("polyak_update") {
  std::mt19937_64 rng(3);
  const Mlp source = Mlp::uniform({3, 4, 1}, rng);
  SUBCASE("tau = 1 copies") {
    Mlp target = Mlp::uniform({3, 4, 1}, rng);
    polyak_update(target, source, 1.0);
    CHECK(target == source);
  }
  SUBCASE("tau = 0 is a no-op") {
    Mlp target = Mlp::uniform({3, 4, 1}, rng);
    const Mlp before = target;
    polyak_update(target, source, 0.0);
    CHECK(target == before);
  }
  SUBCASE("midpoint") {
    Mlp target({1, 1});
    Mlp src({1, 1});
    src.set_weight(0, 0, 0, 2.0);
    src.bias(0)[0] = 2.0;
    polyak_update(target, src, 0.5);
    CHECK(target.weight(0, 0, 0) == 1.0);
    CHECK(target.bias(0)[0] == 1.0);
  }
  SUBCASE("distance to the source never grows") {
    Mlp target = Mlp::uniform({3, 4, 1}, rng);
    auto distance = [&] {
      double d = 0.0;
      for (std::size_t k = 0; k < source.num_params(); ++k) {
        d += std::pow(target.params()[k] - source.params()[k], 2);
      }
      return std::sqrt(d);
    };
    double last = distance();
    for (int k = 0; k < 200; ++k) {
      polyak_update(target, source, 0.05);
      const double now = distance();
      CHECK(now <= last);
      last = now;
    }
  }
  SUBCASE("architecture mismatch") {
    Mlp other({3, 5, 1});
    CHECK_THROWS_AS(polyak_update(other, source, 0.5), ContractViolation);
  }
}

TEST_CASE("policy_sample") {
  SUBCASE("zero mean, unit std, zero noise") {
    GaussianPolicyHead head(Mlp({3, 8}), 4);
    const auto s = policy_sample(head, std::vector<double>{1, 2, 3}, std::vector<double>(4, 0.0));
    CHECK(s.action == std::vector<double>(4, 0.0));
    CHECK(s.log_prob == doctest::Approx(-3.6757541328186907).epsilon(1e-14));
  }
  SUBCASE("zero noise gives tanh(mean)") {
    std::mt19937_64 rng(8);
    const auto head = GaussianPolicyHead::make(5, 4, {16}, rng);
    const std::vector<double> obs = random_vector(5, rng);
    const auto s = policy_sample(head, obs, std::vector<double>(4, 0.0));
    const auto raw = mlp_forward(head.trunk(), obs);
    for (std::size_t j = 0; j < 4; ++j) CHECK(s.action[j] == std::tanh(raw[j]));
  }
  SUBCASE("samples stay strictly inside (-1, 1) with finite log-density") {
    std::mt19937_64 rng(9);
    const auto head = GaussianPolicyHead::make(5, 4, {16, 16}, rng);
    std::normal_distribution<double> normal;
    for (int k = 0; k < 2000; ++k) {
      std::vector<double> noise(4);
      for (double& n : noise) n = 3.0 * normal(rng);
      const auto s = policy_sample(head, random_vector(5, rng, 10.0), noise);
      CHECK(std::isfinite(s.log_prob));
      for (double a : s.action) CHECK(std::abs(a) < 1.0);
    }
  }
  SUBCASE("stable squash correction matches the naive formula where both are accurate") {
    for (double u : {-3.0, -0.5, 0.0, 0.7, 2.5}) {
      CHECK(log_one_minus_tanh_sq(u) == doctest::Approx(std::log(1.0 - std::tanh(u) * std::tanh(u))).epsilon(1e-10));
    }
    CHECK(std::isfinite(log_one_minus_tanh_sq(400.0)));
  }
  SUBCASE("mismatched noise length") {
    GaussianPolicyHead head(Mlp({3, 8}), 4);
    CHECK_THROWS_AS(policy_sample(head, std::vector<double>{1, 2, 3}, std::vector<double>(3, 0.0)),
                    ContractViolation);
  }
}

TEST_CASE("policy_backward matches finite differences of the reparameterised loss") {
  std::mt19937_64 rng(21);
  auto head = GaussianPolicyHead::make(3, 2, {6}, rng);
  Matrix obs = random_matrix(4, 3, rng);
  Matrix noise = random_matrix(4, 2, rng);
  Matrix coeff = random_matrix(4, 2, rng);
  const double log_prob_weight = 0.3;

  // loss = sum_r [ sum_j coeff_rj * a_rj + w * log_prob_r ]
  auto loss = [&](const GaussianPolicyHead& h) {
    PolicyBatch b;
    policy_sample_batch(h, obs, noise, b);
    double total = 0.0;
    for (std::size_t r = 0; r < 4; ++r) {
      for (std::size_t j = 0; j < 2; ++j) total += coeff(r, j) * b.action(r, j);
      total += log_prob_weight * b.log_prob[r];
    }
    return total;
  };

  PolicyBatch batch;
  policy_sample_batch(head, obs, noise, batch);
  std::vector<double> analytic(head.trunk().num_params(), 0.0);
  policy_backward(head, batch, coeff, std::vector<double>(4, log_prob_weight), analytic);

  std::vector<double> numeric(analytic.size());
  for (std::size_t k = 0; k < analytic.size(); ++k) {
    auto p = head.trunk().params();
    const double saved = p[k];
    p[k] = saved + 1e-6;
    const double plus = loss(head);
    p[k] = saved - 1e-6;
    const double minus = loss(head);
    p[k] = saved;
    numeric[k] = (plus - minus) / 2e-6;
  }
  CHECK(gradient_relative_error(analytic, numeric) < 1e-4);
}
