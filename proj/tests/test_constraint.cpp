#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "slsac/constraint.hpp"
#include "slsac/quantile_critic.hpp"
#include "slsac/rng.hpp"

using namespace slsac;

TEST_SUITE("constraint") {

TEST_CASE("window records and evicts FIFO") {
  EpisodeCostWindow w(2);
  CHECK(w.empty());
  w.record(5.0);
  CHECK(w.values() == std::vector<double>{5.0});
  w.record(1.0);
  w.record(3.0);  // 5 evicted
  CHECK(w.values() == std::vector<double>{1.0, 3.0});
  CHECK(w.size() == 2);
  CHECK_THROWS_AS(EpisodeCostWindow(0), std::invalid_argument);
}

TEST_CASE("lambda ascent arithmetic") {
  Multiplier m;
  m.lambda = 0.2;
  m.eta_lambda = 0.05;
  m.beta = 25.0;
  m.warmup_multiplier = 0;
  EpisodeCostWindow w(8);
  w.record(30.0);  // single entry: empirical CVaR = 30
  update_lambda(m, w, 0.5, 1);
  CHECK(m.lambda == doctest::Approx(0.45));
}

TEST_CASE("lambda projects to zero from below") {
  Multiplier m;
  m.lambda = 0.0;
  m.eta_lambda = 0.05;
  m.beta = 25.0;
  m.warmup_multiplier = 0;
  EpisodeCostWindow w(8);
  w.record(20.0);
  update_lambda(m, w, 0.5, 1);
  CHECK(m.lambda == 0.0);  // max(0, -0.25)
}

TEST_CASE("lambda is frozen through the multiplier warmup") {
  Multiplier m;
  m.lambda = 0.7;
  m.warmup_multiplier = 100;
  EpisodeCostWindow w(8);
  w.record(1000.0);
  update_lambda(m, w, 0.5, 100);
  CHECK(m.lambda == 0.7);
  update_lambda(m, w, 0.5, 101);
  CHECK(m.lambda > 0.7);
}

TEST_CASE("empty window during the active phase is a counted no-op") {
  Multiplier m;
  m.lambda = 0.3;
  m.warmup_multiplier = 0;
  EpisodeCostWindow w(8);
  update_lambda(m, w, 0.5, 1);
  CHECK(m.lambda == 0.3);
  CHECK(m.skipped_empty_window == 1);
}

TEST_CASE("violation signals on a hand-checked window") {
  EpisodeCostWindow w(8);
  for (double c : {1.0, 2.0, 3.0, 4.0}) w.record(c);
  CHECK(violation_signal(w, 0.5, 25.0, SignalMode::Cvar) == doctest::Approx(-21.5));
  CHECK(violation_signal(w, 0.5, 25.0, SignalMode::Expected) == doctest::Approx(-22.5));
  CHECK_THROWS_AS(violation_signal(EpisodeCostWindow(4), 0.5, 25.0, SignalMode::Cvar),
                  std::invalid_argument);
}

TEST_CASE("identical costs make both signals equal") {
  EpisodeCostWindow w(8);
  for (int i = 0; i < 5; ++i) w.record(4.0);
  const double cv = violation_signal(w, 0.3, 25.0, SignalMode::Cvar);
  const double ex = violation_signal(w, 0.3, 25.0, SignalMode::Expected);
  CHECK(cv == doctest::Approx(4.0 - 25.0));
  CHECK(cv == doctest::Approx(ex));
}

TEST_CASE("cvar signal dominates the expected signal on random windows") {
  Rng rng(7);
  for (int trial = 0; trial < 1000; ++trial) {
    EpisodeCostWindow w(256);
    const int n = 1 + static_cast<int>(rng.uniform_index(60));
    for (int i = 0; i < n; ++i) w.record(rng.uniform(0, 50));
    const double eps = rng.uniform(0.05, 1.0);
    const double cv = violation_signal(w, eps, 25.0, SignalMode::Cvar);
    const double ex = violation_signal(w, eps, 25.0, SignalMode::Expected);
    CHECK(cv >= ex - 1e-12);
  }
}

TEST_CASE("signal gap decomposes through the order statistics exactly") {
  Rng rng(11);
  for (int trial = 0; trial < 10000; ++trial) {
    const std::size_t n = 1 + rng.uniform_index(100);
    std::vector<double> costs(n);
    for (double& c : costs) c = rng.uniform(0, 50);
    const double eps = rng.uniform(0.01, 0.99);

    EpisodeCostWindow w(n);
    for (double c : costs) w.record(c);
    const double lhs = violation_signal(w, eps, 25.0, SignalMode::Cvar) -
                       violation_signal(w, eps, 25.0, SignalMode::Expected);

    std::sort(costs.begin(), costs.end());
    const std::size_t k =
        static_cast<std::size_t>(std::ceil(eps * static_cast<double>(n)));
    double tail = 0.0;
    for (std::size_t i = n - k; i < n; ++i) tail += costs[i];
    tail /= static_cast<double>(k);
    double body = 0.0;
    if (n > k) {
      for (std::size_t i = 0; i < n - k; ++i) body += costs[i];
      body /= static_cast<double>(n - k);
    }
    const double rhs =
        (1.0 - static_cast<double>(k) / static_cast<double>(n)) * (tail - body);
    CHECK(std::abs(lhs - rhs) <= 1e-12);
  }
}

TEST_CASE("shifting every cost by c moves the lambda increment by eta*c") {
  Rng rng(13);
  std::vector<double> costs(20);
  for (double& x : costs) x = rng.uniform(0, 30);
  const double shift = 5.0, eps = 0.4, eta = 0.01;

  auto increment = [&](double offset) {
    Multiplier m;
    m.lambda = 10.0;  // far from the projection boundary
    m.eta_lambda = eta;
    m.beta = 25.0;
    m.warmup_multiplier = 0;
    EpisodeCostWindow w(32);
    for (double c : costs) w.record(c + offset);
    update_lambda(m, w, eps, 1);
    return m.lambda - 10.0;
  };
  CHECK(increment(shift) - increment(0.0) == doctest::Approx(eta * shift).epsilon(1e-12));
}

TEST_CASE("lambda never goes negative under adversarial updates") {
  Rng rng(17);
  Multiplier m;
  m.lambda = 0.0;
  m.eta_lambda = 0.5;
  m.beta = 25.0;
  m.warmup_multiplier = 0;
  EpisodeCostWindow w(16);
  for (int step = 1; step <= 2000; ++step) {
    w.record(rng.uniform(0, 60));
    update_lambda(m, w, rng.uniform(0.1, 1.0), step);
    CHECK(m.lambda >= 0.0);
  }
}

TEST_CASE("tightened beta arithmetic and infeasibility") {
  CHECK(tightened_beta(25.0, 1.0, 0.25) == doctest::Approx(23.0));
  CHECK(tightened_beta(25.0, 0.0, 0.25) == doctest::Approx(25.0));
  CHECK_THROWS_AS(tightened_beta(1.0, 1.0, 0.25), std::invalid_argument);
}

}  // TEST_SUITE
