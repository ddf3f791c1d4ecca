#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "slsac/mlp.hpp"

using namespace slsac;

namespace {

// independent straight-line re-evaluation of the same arithmetic
std::vector<double> reference_forward(const MlpParams& p, const std::vector<double>& x) {
  std::vector<double> cur = x;
  for (std::size_t l = 0; l < p.layers().size(); ++l) {
    const auto& spec = p.layers()[l];
    const auto w = p.weight(l);
    const auto b = p.bias(l);
    std::vector<double> nxt(spec.out);
    for (int o = 0; o < spec.out; ++o) {
      double acc = b[o];
      for (int i = 0; i < spec.in; ++i)
        acc += w[static_cast<std::size_t>(o) * spec.in + i] * cur[i];
      nxt[o] = spec.act == Activation::Relu ? std::max(0.0, acc) : acc;
    }
    cur = nxt;
  }
  return cur;
}

double central_difference(MlpParams& p, const std::vector<double>& x,
                          const std::vector<double>& cotangent, std::size_t param_idx,
                          double h) {
  const double saved = p.flat()[param_idx];
  auto f = [&](double shift) {
    p.flat_mut()[param_idx] = saved + shift;
    const auto out = mlp_forward(p, x);
    double dot = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) dot += out[i] * cotangent[i];
    return dot;
  };
  const double result = (f(h) - f(-h)) / (2.0 * h);
  p.flat_mut()[param_idx] = saved;
  return result;
}

// max relative error of the analytic gradient against central differences
double max_grad_rel_error(MlpParams& p, Rng& rng) {
  std::vector<double> x(p.input_dim());
  for (double& v : x) v = rng.uniform(-2.0, 2.0);
  std::vector<double> cot(p.output_dim());
  for (double& v : cot) v = rng.uniform(-1.0, 1.0);

  MlpTape tape;
  mlp_forward(p, x, &tape);
  const auto grads = mlp_backward(p, tape, cot);

  double worst = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double fd = central_difference(p, x, cot, i, 1e-6);
    // parameters changed and were restored; re-run forward for a fresh tape
    const double denom = std::max({std::abs(fd), std::abs(grads.flat[i]), 1e-8});
    worst = std::max(worst, std::abs(fd - grads.flat[i]) / denom);
  }
  return worst;
}

}  // namespace

TEST_SUITE("mlp") {

TEST_CASE("zero network maps any input to zero") {
  MlpParams p({3, 8, 2});
  const auto out = mlp_forward(p, std::vector<double>{1.0, -2.0, 0.5});
  for (double v : out) CHECK(v == 0.0);
}

TEST_CASE("single identity layer with relu gates negatives") {
  MlpParams p({2, 2}, Activation::Relu, Activation::Relu);
  auto w = p.weight(0);
  w[0] = 1.0;  // identity
  w[3] = 1.0;
  const auto out = mlp_forward(p, std::vector<double>{1.0, -1.0});
  CHECK(out[0] == doctest::Approx(1.0));
  CHECK(out[1] == 0.0);
}

TEST_CASE("forward matches an independent re-evaluation") {
  Rng rng(7);
  MlpParams p({2, 64, 64, 1});
  init_uniform_fanin(p, rng);
  std::vector<double> x{0.7, -1.3};
  const auto got = mlp_forward(p, x);
  const auto want = reference_forward(p, x);
  REQUIRE(got.size() == want.size());
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
}

TEST_CASE("forward is deterministic") {
  Rng rng(3);
  MlpParams p({4, 16, 3});
  init_uniform_fanin(p, rng);
  std::vector<double> x{0.1, 0.2, 0.3, 0.4};
  const auto a = mlp_forward(p, x);
  const auto b = mlp_forward(p, x);
  CHECK(a == b);  // bit-identical
}

TEST_CASE("input dimension mismatch is rejected") {
  MlpParams p({3, 4});
  CHECK_THROWS_AS(mlp_forward(p, std::vector<double>{1.0, 2.0}), std::invalid_argument);
}

TEST_CASE("zero cotangent produces zero gradients") {
  Rng rng(11);
  MlpParams p({3, 8, 2});
  init_uniform_fanin(p, rng);
  MlpTape tape;
  mlp_forward(p, std::vector<double>{1.0, 2.0, 3.0}, &tape);
  const auto g = mlp_backward(p, tape, std::vector<double>{0.0, 0.0});
  for (double v : g.flat) CHECK(v == 0.0);
}

TEST_CASE("linear layer closed-form gradient: dW = g x^T, db = g") {
  Rng rng(13);
  MlpParams p({3, 2}, Activation::Relu, Activation::Identity);
  init_uniform_fanin(p, rng);
  const std::vector<double> x{0.5, -1.5, 2.0};
  const std::vector<double> g{2.0, -3.0};
  MlpTape tape;
  mlp_forward(p, x, &tape);
  const auto grads = mlp_backward(p, tape, g);
  // layout: W (2x3 row-major) then b (2)
  for (int o = 0; o < 2; ++o) {
    for (int i = 0; i < 3; ++i)
      CHECK(grads.flat[o * 3 + i] == doctest::Approx(g[o] * x[i]));
    CHECK(grads.flat[6 + o] == doctest::Approx(g[o]));
  }
}

TEST_CASE("backward matches central finite differences") {
  Rng rng(17);
  MlpParams p({2, 16, 16, 1});
  init_uniform_fanin(p, rng);
  CHECK(max_grad_rel_error(p, rng) < 1e-5);
}

TEST_CASE("input gradient matches finite differences") {
  Rng rng(19);
  MlpParams p({3, 12, 2});
  init_uniform_fanin(p, rng);
  std::vector<double> x{0.4, -0.2, 1.1};
  std::vector<double> cot{1.0, -0.5};
  MlpTape tape;
  mlp_forward(p, x, &tape);
  std::vector<double> gin;
  mlp_backward(p, tape, cot, &gin);
  const auto gin_fast = mlp_input_grad(p, tape, cot);
  const double h = 1e-6;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto probe = x;
    probe[i] += h;
    const auto up = mlp_forward(p, probe);
    probe[i] -= 2 * h;
    const auto dn = mlp_forward(p, probe);
    double fd = 0.0;
    for (std::size_t o = 0; o < up.size(); ++o) fd += (up[o] - dn[o]) * cot[o];
    fd /= 2 * h;
    CHECK(gin[i] == doctest::Approx(fd).epsilon(1e-5));
    CHECK(gin_fast[i] == doctest::Approx(gin[i]).epsilon(1e-12));
  }
}

TEST_CASE("stale tape is rejected after a parameter mutation") {
  Rng rng(23);
  MlpParams p({2, 4, 1});
  init_uniform_fanin(p, rng);
  MlpTape tape;
  mlp_forward(p, std::vector<double>{1.0, 1.0}, &tape);
  p.flat_mut()[0] += 0.1;
  CHECK_THROWS_AS(mlp_backward(p, tape, std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("soft update endpoints and hand-computed convex combination") {
  MlpParams online({1, 1}), target({1, 1});
  online.flat_mut()[0] = 2.0;
  target.flat_mut()[0] = 0.0;

  MlpParams t0 = target;
  soft_update(online, t0, 0.0);
  CHECK(t0.flat()[0] == 0.0);

  MlpParams t1 = target;
  soft_update(online, t1, 1.0);
  CHECK(t1.flat()[0] == 2.0);

  MlpParams tq = target;
  soft_update(online, tq, 0.25);
  CHECK(tq.flat()[0] == doctest::Approx(0.5));
}

TEST_CASE("soft update contracts the gap by exactly (1 - tau)") {
  Rng rng(29);
  MlpParams online({3, 8, 2}), target({3, 8, 2});
  init_uniform_fanin(online, rng);
  init_uniform_fanin(target, rng);
  const double tau = 0.13;

  double gap_before = 0.0;
  for (std::size_t i = 0; i < online.size(); ++i) {
    const double d = target.flat()[i] - online.flat()[i];
    gap_before += d * d;
  }
  soft_update(online, target, tau);
  double gap_after = 0.0;
  for (std::size_t i = 0; i < online.size(); ++i) {
    const double d = target.flat()[i] - online.flat()[i];
    gap_after += d * d;
  }
  CHECK(std::sqrt(gap_after) ==
        doctest::Approx((1.0 - tau) * std::sqrt(gap_before)).epsilon(1e-12));
}

TEST_CASE("soft update rejects shape mismatch") {
  MlpParams a({2, 3}), b({3, 2});
  CHECK_THROWS_AS(soft_update(a, b, 0.5), std::invalid_argument);
}

TEST_CASE("fan-in initialization stays within bounds and is finite") {
  Rng rng(31);
  MlpParams p({9, 16, 4});
  init_uniform_fanin(p, rng);
  CHECK(p.all_finite());
  const double bound0 = 1.0 / 3.0;
  for (double w : p.weight(0)) CHECK(std::abs(w) <= bound0);
}

}  // TEST_SUITE
