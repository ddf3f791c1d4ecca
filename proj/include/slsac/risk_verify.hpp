#pragma once

#include <span>
#include <string>
#include <vector>

#include "slsac/rng.hpp"

namespace slsac::verify {

// Monotone piecewise-linear quantile function on [0, 1] with exact
// integration; keeps bound checks free of quadrature error.
class PiecewiseQuantileFn {
 public:
  PiecewiseQuantileFn(std::vector<double> taus, std::vector<double> values);

  double operator()(double tau) const;
  const std::vector<double>& taus() const { return taus_; }
  const std::vector<double>& values() const { return values_; }

  // Exact integral of q over [lo, hi].
  double integral(double lo, double hi) const;

  static PiecewiseQuantileFn random(Rng& rng, int max_knots = 12, double value_scale = 5.0);

 private:
  std::vector<double> taus_, values_;
};

// (1/eps) * integral_{1-eps}^{1} q(tau) dtau
double analytic_cvar(const PiecewiseQuantileFn& q, double epsilon);

// Exact integral_0^1 (q1 - q2)^2 dtau.
double mean_squared_quantile_error(const PiecewiseQuantileFn& q1,
                                   const PiecewiseQuantileFn& q2);

struct BoundReport {
  std::string name;
  bool passed = false;
  long trials = 0;
  long violations = 0;
  double worst_slack = 0.0;  // min over trials of (bound - observed); >= 0 when passed
  std::string detail;
};

// |CVaR_eps(q1) - CVaR_eps(q2)| <= delta / sqrt(eps) over random quantile
// function pairs and eps in {0.1, 0.25, 0.5, 1.0}.
BoundReport verify_cvar_error_bound(long trials, Rng& rng, double tolerance = 1e-9);

struct BoundComparison {
  double cvar_bound = 0.0;      // beta + delta / sqrt(eps)
  double expected_bound = 0.0;  // (beta + delta) / eps
  bool tighter = false;
};

// The two tail-risk bounds for a satisfied constraint; the CVaR-based one is
// strictly tighter for beta, delta > 0 and eps in (0, 1).
BoundComparison verify_bound_comparison(double beta, double delta, double epsilon);

// Strict-margin sweep over random (beta, delta, eps).
BoundReport verify_bound_comparison_sweep(long trials, Rng& rng);

// beta' = beta - delta / sqrt(eps); requires beta > delta / sqrt(eps).
double tightened_threshold(double beta, double delta, double epsilon);

// Numerical check that enforcing CVaR <= beta' on the approximation implies
// CVaR <= beta on the true function whenever the L2 quantile error is delta.
BoundReport verify_safety_margin(long trials, Rng& rng);

// Order-statistics identity: (cvar_signal - exp_signal) ==
// (1 - k/N) * (tail_mean - body_mean), plus tail >= body dominance.
BoundReport verify_signal_identity(long trials, Rng& rng, double tolerance = 1e-12);

struct GpdParams {
  double shape = 0.0;  // nu in [0, 1)
  double scale = 1.0;  // sigma > 0
  double threshold = 0.0;  // u
};

// Survival-function inversion of the exceedance law; u_prob in [0, 1).
double gpd_inverse_cdf(const GpdParams& params, double u_prob);
// e^{-1} for nu = 0, (1-nu)^{1/nu} otherwise.
double gpd_gamma(double nu);

// Monte Carlo check of Pr(Z > beta) <= (1-eps) * gamma(nu) at the
// CVaR-equality boundary, with a 3-standard-error allowance. Body mass eps is
// uniform on [0, u]; it never contributes to the exceedance probability.
BoundReport gpd_violation_check(const GpdParams& params, double epsilon, long samples,
                                Rng& rng);

// sup-W1 contraction of the distributional Bellman operator on random
// tabular instances, by exact enumeration.
BoundReport contraction_check(int instances, double gamma, Rng& rng,
                              double tolerance = 1e-9);

// W1 distance between two finite discrete distributions (atoms, weights).
double wasserstein1(std::span<const double> xs, std::span<const double> px,
                    std::span<const double> ys, std::span<const double> py);

struct SuiteOptions {
  std::uint64_t seed = 0;
  long cvar_bound_trials = 1000;
  long comparison_trials = 10000;
  long margin_trials = 1000;
  long signal_trials = 10000;
  long gpd_samples = 1000000;
  int contraction_instances = 100;
  bool inject_fault = false;  // negative control: flips one bound check
};

struct SuiteReport {
  std::vector<BoundReport> reports;
  bool all_passed = false;
  std::string to_json() const;
};

// One entry per theorem/corollary/lemma.
SuiteReport run_suite(const SuiteOptions& opts);

}  // namespace slsac::verify
