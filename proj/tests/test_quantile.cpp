#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "slsac/optim.hpp"
#include "slsac/quantile_critic.hpp"

using namespace slsac;

namespace {

// flatten critic parameters in the optimizer's block order
std::vector<double> critic_params(const QuantileCostCritic& c) {
  std::vector<double> out;
  out.insert(out.end(), c.trunk.flat().begin(), c.trunk.flat().end());
  out.insert(out.end(), c.embed_w.begin(), c.embed_w.end());
  out.insert(out.end(), c.embed_b.begin(), c.embed_b.end());
  out.insert(out.end(), c.head.flat().begin(), c.head.flat().end());
  return out;
}

void set_critic_params(QuantileCostCritic& c, const std::vector<double>& flat) {
  std::size_t off = 0;
  auto put = [&](std::span<double> dst) {
    std::copy(flat.begin() + static_cast<std::ptrdiff_t>(off),
              flat.begin() + static_cast<std::ptrdiff_t>(off + dst.size()), dst.begin());
    off += dst.size();
  };
  put(c.trunk.flat_mut());
  put({c.embed_w.data(), c.embed_w.size()});
  put({c.embed_b.data(), c.embed_b.size()});
  put(c.head.flat_mut());
}

std::vector<double> critic_grads_flat(const CostCriticGrads& g) {
  std::vector<double> out;
  out.insert(out.end(), g.trunk.flat.begin(), g.trunk.flat.end());
  out.insert(out.end(), g.embed_w.begin(), g.embed_w.end());
  out.insert(out.end(), g.embed_b.begin(), g.embed_b.end());
  out.insert(out.end(), g.head.flat.begin(), g.head.flat.end());
  return out;
}

Transition make_transition(std::vector<double> s, std::vector<double> a, double c,
                           std::vector<double> s_next, bool d) {
  Transition t;
  t.s = std::move(s);
  t.a = std::move(a);
  t.c = c;
  t.s_next = std::move(s_next);
  t.d = d;
  return t;
}

}  // namespace

TEST_SUITE("quantile") {

TEST_CASE("huber branches") {
  CHECK(huber(0.0, 1.0) == 0.0);
  CHECK(huber(0.5, 1.0) == doctest::Approx(0.125));
  CHECK(huber(2.0, 1.0) == doctest::Approx(1.5));
  CHECK(huber(-2.0, 1.0) == doctest::Approx(1.5));
  CHECK_THROWS_AS(huber(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("quantile huber asymmetry") {
  CHECK(quantile_huber(0.0, 0.3, 1.0) == 0.0);
  CHECK(quantile_huber(-1.0, 0.9, 1.0) == doctest::Approx(0.05));
  CHECK(quantile_huber(1.0, 0.9, 1.0) == doctest::Approx(0.45));
}

TEST_CASE("quantile huber is nonnegative and continuous at the kappa seam") {
  Rng rng(3);
  for (int i = 0; i < 2000; ++i) {
    const double delta = rng.uniform(-5, 5);
    const double tau = rng.uniform();
    CHECK(quantile_huber(delta, tau, 1.0) >= 0.0);
  }
  const double kappa = 1.0;
  for (double tau : {0.1, 0.5, 0.9}) {
    const double below = quantile_huber(kappa - 1e-9, tau, kappa);
    const double above = quantile_huber(kappa + 1e-9, tau, kappa);
    CHECK(std::abs(below - above) < 1e-8);
  }
}

TEST_CASE("empirical cvar on small windows") {
  const std::vector<double> s{1.0, 2.0, 3.0, 4.0};
  CHECK(empirical_cvar(s, 0.5) == doctest::Approx(3.5));
  CHECK(empirical_cvar(s, 1.0) == doctest::Approx(2.5));
  const std::vector<double> constant{7.0, 7.0, 7.0};
  CHECK(empirical_cvar(constant, 0.25) == doctest::Approx(7.0));
  CHECK_THROWS_AS(empirical_cvar({}, 0.5), std::invalid_argument);
  CHECK_THROWS_AS(empirical_cvar(s, 0.0), std::invalid_argument);
}

TEST_CASE("empirical cvar is nonincreasing in epsilon") {
  Rng rng(5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<double> s(1 + rng.uniform_index(40));
    for (double& x : s) x = rng.uniform(-10, 10);
    double prev = empirical_cvar(s, 0.05);
    for (double eps : {0.1, 0.25, 0.5, 0.75, 1.0}) {
      const double cur = empirical_cvar(s, eps);
      CHECK(cur <= prev + 1e-12);
      prev = cur;
    }
  }
}

TEST_CASE("cosine features at the spec anchors") {
  const auto f0 = cosine_features(0.0, 64);
  for (double v : f0) CHECK(v == doctest::Approx(1.0));
  CHECK(cosine_features(0.5, 4)[1] == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(cosine_features(1.0, 4)[2] == doctest::Approx(1.0));
  CHECK_THROWS_AS(cosine_features(1.5, 4), std::invalid_argument);
}

TEST_CASE("zero-weight head gives zero quantile values for any tau") {
  Rng rng(7);
  QuantileCostCritic critic(2, 1, 16, 8, rng);
  for (double& w : critic.head.flat_mut()) w = 0.0;
  const std::vector<double> taus{0.0, 0.25, 0.5, 0.9, 1.0};
  const auto z = critic.quantiles(std::vector<double>{0.3, -0.7},
                                  std::vector<double>{0.5}, taus);
  for (double v : z) CHECK(v == 0.0);
}

TEST_CASE("quantile forward is deterministic") {
  Rng rng(11);
  QuantileCostCritic critic(2, 1, 16, 8, rng);
  const std::vector<double> s{0.1, 0.2}, a{-0.3}, taus{0.1, 0.6};
  CHECK(critic.quantiles(s, a, taus) == critic.quantiles(s, a, taus));
}

TEST_CASE("cvar over an exact synthetic quantile function") {
  // Z(tau) = tau: uniform cost on [0, 1]
  auto identity = [](double tau) { return tau; };
  CHECK(cvar_from_quantile_fn(identity, 0.5, 100000, CvarMode::Stratified, nullptr) ==
        doctest::Approx(0.75).epsilon(1e-3));
  CHECK(cvar_from_quantile_fn(identity, 1.0, 100000, CvarMode::Stratified, nullptr) ==
        doctest::Approx(0.5).epsilon(1e-3));
  Rng rng(13);
  CHECK(cvar_from_quantile_fn(identity, 0.5, 100000, CvarMode::Sampled, &rng) ==
        doctest::Approx(0.75).epsilon(1e-3));
  // constant quantile function -> the constant, for any epsilon and n
  auto constant = [](double) { return 3.25; };
  CHECK(cvar_from_quantile_fn(constant, 0.17, 7, CvarMode::Stratified, nullptr) ==
        doctest::Approx(3.25));
  CHECK_THROWS_AS(cvar_from_quantile_fn(identity, 0.0, 8, CvarMode::Stratified, nullptr),
                  std::invalid_argument);
}

TEST_CASE("critic cvar in stratified mode is deterministic") {
  Rng rng(17);
  QuantileCostCritic critic(2, 1, 16, 8, rng);
  const std::vector<double> s{0.1, 0.2}, a{0.5};
  const double c1 = critic.cvar(s, a, 0.5, 32, CvarMode::Stratified);
  const double c2 = critic.cvar(s, a, 0.5, 32, CvarMode::Stratified);
  CHECK(c1 == c2);
}

TEST_CASE("cost loss is zero at the all-zero fixed point on terminal zero-cost data") {
  Rng rng(19);
  QuantileCostCritic critic(2, 1, 16, 8, rng);
  for (double& w : critic.head.flat_mut()) w = 0.0;
  critic.sync_targets();
  std::vector<Transition> batch{
      make_transition({0.0, 0.0}, {0.0}, 0.0, {0.0, 0.0}, true),
      make_transition({1.0, 1.0}, {0.5}, 0.0, {0.0, 0.0}, true)};
  const std::vector<std::vector<double>> next_actions(batch.size(), {0.0});
  const std::vector<double> taus{0.25, 0.75};
  const auto res =
      cost_critic_loss_with_taus(critic, batch, next_actions, taus, taus, 0.99, 1.0);
  CHECK(res.loss == 0.0);
  for (double g : critic_grads_flat(res.grads)) CHECK(g == 0.0);
}

TEST_CASE("single-transition loss equals the hand-evaluated quantile huber") {
  // 1x1 nets with hand-set weights so Z is a known constant per tau
  Rng rng(23);
  QuantileCostCritic critic(1, 1, 1, 1, rng);
  // trunk: relu(w*(s ++ a) + b) with zero weights, bias 2 -> h = 2
  auto tw = critic.trunk.flat_mut();
  tw[0] = 0.0;
  tw[1] = 0.0;
  tw[2] = 2.0;
  // embedding: cos(0*tau) = 1 projected with weight 1, bias -0.5 -> e = 0.5
  critic.embed_w[0] = 1.0;
  critic.embed_b[0] = -0.5;
  // head: 1 -> 1 -> 1, first layer w=1 b=0 (relu), out w=3 b=0
  auto hw = critic.head.flat_mut();
  hw[0] = 1.0;  // l0 W
  hw[1] = 0.0;  // l0 b
  hw[2] = 3.0;  // l1 W
  hw[3] = 0.0;  // l1 b
  critic.sync_targets();
  // Z(s, a; tau) = 3 * relu(1 * (0.5 * 2)) = 3 for every tau
  const auto z = critic.quantiles(std::vector<double>{0.0}, std::vector<double>{0.0},
                                  std::vector<double>{0.5});
  REQUIRE(z[0] == doctest::Approx(3.0));

  // terminal transition, c = 1: delta = 1 - 3 = -2
  std::vector<Transition> batch{make_transition({0.0}, {0.0}, 1.0, {0.0}, true)};
  const std::vector<std::vector<double>> next_actions{{0.0}};
  const std::vector<double> tau{0.5};
  const auto res =
      cost_critic_loss_with_taus(critic, batch, next_actions, tau, tau, 0.99, 1.0);
  CHECK(res.loss == doctest::Approx(quantile_huber(-2.0, 0.5, 1.0)));
  CHECK(res.loss == doctest::Approx(0.5 * 1.0 * (2.0 - 0.5)));
}

TEST_CASE("cost loss is finite and nonnegative on random batches") {
  Rng rng(29);
  QuantileCostCritic critic(2, 1, 16, 8, rng);
  critic.sync_targets();
  std::vector<Transition> batch;
  std::vector<std::vector<double>> next_actions;
  for (int i = 0; i < 8; ++i) {
    batch.push_back(make_transition({rng.uniform(-1, 1), rng.uniform(-1, 1)},
                                    {rng.uniform(-1, 1)}, rng.uniform(0, 2),
                                    {rng.uniform(-1, 1), rng.uniform(-1, 1)}, false));
    next_actions.push_back({rng.uniform(-1, 1)});
  }
  const std::vector<double> taus{0.1, 0.4, 0.8};
  const auto res =
      cost_critic_loss_with_taus(critic, batch, next_actions, taus, taus, 0.99, 1.0);
  CHECK(std::isfinite(res.loss));
  CHECK(res.loss >= 0.0);
  CHECK_THROWS_AS(cost_critic_loss_with_taus(critic, {}, {}, taus, taus, 0.99, 1.0),
                  std::invalid_argument);
}

TEST_CASE("cost loss gradient matches central finite differences") {
  Rng rng(31);
  QuantileCostCritic critic(2, 1, 6, 4, rng);
  critic.sync_targets();
  std::vector<Transition> batch{
      make_transition({0.4, -0.2}, {0.3}, 0.7, {0.1, 0.5}, false),
      make_transition({-0.6, 0.9}, {-0.8}, 1.2, {0.2, -0.4}, true)};
  const std::vector<std::vector<double>> next_actions{{0.2}, {0.0}};
  const std::vector<double> taus{0.2, 0.7}, taus_t{0.35, 0.9};

  const auto res =
      cost_critic_loss_with_taus(critic, batch, next_actions, taus, taus_t, 0.9, 1.0);
  const auto analytic = critic_grads_flat(res.grads);

  auto loss_at = [&](const std::vector<double>& flat) {
    QuantileCostCritic probe = critic;
    set_critic_params(probe, flat);
    return cost_critic_loss_with_taus(probe, batch, next_actions, taus, taus_t, 0.9, 1.0)
        .loss;
  };
  const auto base = critic_params(critic);
  const double h = 1e-6;
  double worst = 0.0;
  for (std::size_t i = 0; i < base.size(); i += 3) {  // probe a third of them
    auto up = base, dn = base;
    up[i] += h;
    dn[i] -= h;
    const double fd = (loss_at(up) - loss_at(dn)) / (2 * h);
    const double denom = std::max({std::abs(fd), std::abs(analytic[i]), 1e-6});
    worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("monotone spread after regression on synthetic data with known spread") {
  // regress on terminal costs drawn uniformly from [0, 1] at a fixed (s, a);
  // afterwards the upper quantiles must sit above the lower ones on average
  Rng rng(37);
  QuantileCostCritic critic(1, 1, 32, 16, rng);
  critic.sync_targets();
  auto opt = OptimizerState::sized_for(critic.param_count());
  opt.eta = 3e-3;
  Rng data(41);

  const std::vector<double> s{0.0}, a{0.0};
  std::vector<double> taus(8), taus_t(8);
  for (int step = 0; step < 1500; ++step) {
    std::vector<Transition> batch;
    std::vector<std::vector<double>> next_actions;
    for (int b = 0; b < 16; ++b) {
      batch.push_back(make_transition(s, a, data.uniform(), s, true));
      next_actions.push_back(a);
    }
    for (double& t : taus) t = data.uniform();
    for (double& t : taus_t) t = data.uniform();
    const auto res = cost_critic_loss_with_taus(critic, batch, next_actions, taus,
                                                taus_t, 0.99, 0.01);
    // one shared adamw state over the concatenated blocks
    auto flat = critic_params(critic);
    adamw_step(flat, critic_grads_flat(res.grads), opt);
    set_critic_params(critic, flat);
  }
  const auto z = critic.quantiles(s, a, std::vector<double>{0.1, 0.9});
  CHECK(z[1] - z[0] >= 0.0);
  CHECK(z[1] > z[0]);  // strictly, on this spread
}

TEST_CASE("quantile embedding rejects tau outside [0, 1]") {
  Rng rng(43);
  QuantileCostCritic critic(1, 1, 4, 4, rng);
  CHECK_THROWS_AS(critic.quantile_embedding(-0.1), std::invalid_argument);
  CHECK_THROWS_AS(critic.quantiles(std::vector<double>{0.0}, std::vector<double>{0.0},
                                   std::vector<double>{1.1}),
                  std::invalid_argument);
}

}  // TEST_SUITE
