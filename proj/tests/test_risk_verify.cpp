#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "slsac/quantile_critic.hpp"
#include "slsac/risk_verify.hpp"

using namespace slsac;
using namespace slsac::verify;

TEST_SUITE("risk_verify") {

TEST_CASE("analytic cvar of simple quantile functions") {
  const PiecewiseQuantileFn constant({0.0, 1.0}, {4.0, 4.0});
  CHECK(analytic_cvar(constant, 0.3) == doctest::Approx(4.0));
  CHECK(analytic_cvar(constant, 1.0) == doctest::Approx(4.0));

  const PiecewiseQuantileFn identity({0.0, 1.0}, {0.0, 1.0});
  CHECK(analytic_cvar(identity, 0.5) == doctest::Approx(0.75));
  CHECK(analytic_cvar(identity, 1.0) == doctest::Approx(0.5));
  CHECK_THROWS_AS(analytic_cvar(identity, 0.0), std::invalid_argument);
}

TEST_CASE("quantile function validation") {
  CHECK_THROWS_AS(PiecewiseQuantileFn({0.0, 0.5}, {0.0, 1.0}), std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseQuantileFn({0.0, 0.5, 1.0}, {0.0, 1.0, 0.5}),
                  std::invalid_argument);
  CHECK_THROWS_AS(PiecewiseQuantileFn({0.0, 0.0, 1.0}, {0.0, 0.0, 1.0}),
                  std::invalid_argument);
}

TEST_CASE("analytic cvar is nonincreasing in epsilon for monotone q") {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const auto q = PiecewiseQuantileFn::random(rng);
    double prev = analytic_cvar(q, 0.05);
    for (double eps : {0.1, 0.25, 0.5, 0.75, 1.0}) {
      const double cur = analytic_cvar(q, eps);
      CHECK(cur <= prev + 1e-12);
      prev = cur;
    }
  }
}

TEST_CASE("exact mean squared quantile error against a dense Riemann sum") {
  Rng rng(5);
  const auto q1 = PiecewiseQuantileFn::random(rng);
  const auto q2 = PiecewiseQuantileFn::random(rng);
  const double exact = mean_squared_quantile_error(q1, q2);
  double riemann = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double tau = (i + 0.5) / n;
    const double d = q1(tau) - q2(tau);
    riemann += d * d / n;
  }
  CHECK(exact == doctest::Approx(riemann).epsilon(1e-6));
}

TEST_CASE("cvar error bound: identical functions, arithmetic, random sweep") {
  Rng rng(7);
  const auto q = PiecewiseQuantileFn::random(rng);
  CHECK(std::abs(analytic_cvar(q, 0.25) - analytic_cvar(q, 0.25)) == 0.0);
  CHECK(mean_squared_quantile_error(q, q) == doctest::Approx(0.0));

  CHECK(0.1 / std::sqrt(0.25) == doctest::Approx(0.2));  // delta/sqrt(eps)

  Rng sweep_rng(11);
  const auto rep = verify_cvar_error_bound(1000, sweep_rng);
  CHECK(rep.passed);
  CHECK(rep.violations == 0);
  CHECK(rep.worst_slack >= 0.0);
}

TEST_CASE("bound comparison on the worked example and at the eps -> 1 limit") {
  const auto cmp = verify_bound_comparison(25.0, 1.0, 0.25);
  CHECK(cmp.cvar_bound == doctest::Approx(27.0));
  CHECK(cmp.expected_bound == doctest::Approx(104.0));
  CHECK(cmp.tighter);

  const double eps = 1.0 - 1e-9;
  const auto near_one = verify_bound_comparison(25.0, 1.0, eps);
  CHECK(near_one.cvar_bound == doctest::Approx(26.0).epsilon(1e-6));
  CHECK(near_one.expected_bound == doctest::Approx(26.0).epsilon(1e-6));
  CHECK_THROWS_AS(verify_bound_comparison(0.0, 1.0, 0.5), std::invalid_argument);
}

TEST_CASE("worst-case two-point distribution attains CVaR = mu/eps") {
  // mass (1-eps) at 0, mass eps at mu/eps
  const double mu = 2.0, eps = 0.25;
  Rng rng(13);
  std::vector<double> draws(200000);
  for (double& d : draws) d = rng.uniform() < eps ? mu / eps : 0.0;
  CHECK(empirical_cvar(draws, eps) == doctest::Approx(mu / eps).epsilon(0.02));
}

TEST_CASE("tightened threshold arithmetic") {
  CHECK(tightened_threshold(25.0, 1.0, 0.25) == doctest::Approx(23.0));
  CHECK(tightened_threshold(25.0, 0.0, 0.25) == doctest::Approx(25.0));
  CHECK_THROWS_AS(tightened_threshold(1.0, 1.0, 0.25), std::invalid_argument);
}

TEST_CASE("safety margin check passes on random pairs") {
  Rng rng(17);
  const auto rep = verify_safety_margin(300, rng);
  CHECK(rep.passed);
}

TEST_CASE("signal identity on the worked window and the constant window") {
  Rng rng(19);
  {
    // window [1,2,3,4], eps = 0.5: lhs = 1, rhs = (1 - 2/4)(3.5 - 1.5) = 1
    std::vector<double> w{1, 2, 3, 4};
    const double lhs = empirical_cvar(w, 0.5) - 2.5;
    const double rhs = (1.0 - 2.0 / 4.0) * (3.5 - 1.5);
    CHECK(lhs == doctest::Approx(rhs));
  }
  {
    std::vector<double> w{3, 3, 3};
    CHECK(empirical_cvar(w, 0.4) - 3.0 == doctest::Approx(0.0));
  }
  const auto rep = verify_signal_identity(10000, rng);
  CHECK(rep.passed);
  CHECK(rep.violations == 0);
}

TEST_CASE("gpd gamma values and inverse cdf anchors") {
  CHECK(gpd_gamma(0.0) == doctest::Approx(std::exp(-1.0)));
  CHECK(gpd_gamma(0.5) == doctest::Approx(0.25));
  CHECK(gpd_gamma(0.25) == doctest::Approx(std::pow(0.75, 4.0)));
  CHECK_THROWS_AS(gpd_gamma(1.0), std::invalid_argument);

  GpdParams p{0.5, 2.0, 0.0};
  CHECK(gpd_inverse_cdf(p, 0.0) == doctest::Approx(0.0));
  GpdParams exp_tail{0.0, 1.5, 0.0};
  CHECK(gpd_inverse_cdf(exp_tail, 0.0) == doctest::Approx(0.0));
  // exponential median
  CHECK(gpd_inverse_cdf(exp_tail, 0.5) == doctest::Approx(1.5 * std::log(2.0)));
}

TEST_CASE("gpd inverse cdf matches the survival function") {
  Rng rng(23);
  for (double nu : {0.0, 0.25, 0.5}) {
    GpdParams p{nu, 1.3, 0.0};
    for (int i = 0; i < 100; ++i) {
      const double u = rng.uniform();
      const double y = gpd_inverse_cdf(p, u);
      const double survival =
          nu == 0.0 ? std::exp(-y / p.scale)
                    : std::pow(1.0 + nu * y / p.scale, -1.0 / nu);
      CHECK(survival == doctest::Approx(1.0 - u).epsilon(1e-9));
    }
  }
}

TEST_CASE("gpd violation bound holds at the equality boundary") {
  Rng rng(29);
  for (double nu : {0.0, 0.5}) {
    GpdParams p{nu, 1.0, 2.0};
    const auto rep = gpd_violation_check(p, 0.5, 200000, rng);
    CHECK(rep.passed);
  }
  GpdParams bad{1.2, 1.0, 0.0};
  Rng rng2(31);
  CHECK_THROWS_AS(gpd_violation_check(bad, 0.5, 10, rng2), std::invalid_argument);
}

TEST_CASE("wasserstein distance of point masses is the gap") {
  const std::vector<double> x{1.0}, px{1.0}, y{3.5}, py{1.0};
  CHECK(wasserstein1(x, px, y, py) == doctest::Approx(2.5));
  // identical distributions -> zero
  const std::vector<double> xs{0.0, 1.0}, ps{0.4, 0.6};
  CHECK(wasserstein1(xs, ps, xs, ps) == doctest::Approx(0.0));
}

TEST_CASE("deterministic single-state chain contracts a point-mass shift by gamma") {
  // TZ = c + gamma Z on one state: a shift of 1 becomes a shift of gamma
  const double gamma = 0.9, c = 0.3;
  const std::vector<double> z1{1.0}, z2{2.0}, w{1.0};
  std::vector<double> t1{c + gamma * z1[0]}, t2{c + gamma * z2[0]};
  const double before = wasserstein1(z1, w, z2, w);
  const double after = wasserstein1(t1, w, t2, w);
  CHECK(before == doctest::Approx(1.0));
  CHECK(after == doctest::Approx(0.9));
}

TEST_CASE("contraction holds on random tabular instances") {
  Rng rng(37);
  const auto rep = contraction_check(100, 0.9, rng);
  CHECK(rep.passed);
  CHECK(rep.violations == 0);
}

TEST_CASE("empirical cvar of inverse-cdf samples converges to the analytic value") {
  Rng rng(41);
  const auto q = PiecewiseQuantileFn::random(rng);
  const double eps = 0.5;
  std::vector<double> samples(1000000);
  for (double& s : samples) s = q(rng.uniform());
  CHECK(empirical_cvar(samples, eps) ==
        doctest::Approx(analytic_cvar(q, eps)).epsilon(0.01));
}

TEST_CASE("suite runs, is seed-deterministic, and the fault injection trips it") {
  SuiteOptions opts;
  opts.seed = 5;
  opts.cvar_bound_trials = 50;
  opts.comparison_trials = 200;
  opts.margin_trials = 50;
  opts.signal_trials = 200;
  opts.gpd_samples = 20000;
  opts.contraction_instances = 10;
  const auto suite = run_suite(opts);
  CHECK(suite.all_passed);
  CHECK(suite.reports.size() == 6);  // one entry per theorem/corollary/lemma

  const auto again = run_suite(opts);
  for (std::size_t i = 0; i < suite.reports.size(); ++i)
    CHECK(suite.reports[i].worst_slack == again.reports[i].worst_slack);

  auto faulty = opts;
  faulty.inject_fault = true;
  CHECK_FALSE(run_suite(faulty).all_passed);
}

}  // TEST_SUITE
