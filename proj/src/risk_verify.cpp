#include "slsac/risk_verify.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace slsac::verify {

PiecewiseQuantileFn::PiecewiseQuantileFn(std::vector<double> taus,
                                         std::vector<double> values)
    : taus_(std::move(taus)), values_(std::move(values)) {
  if (taus_.size() != values_.size() || taus_.size() < 2)
    throw std::invalid_argument("quantile fn: need matching knot/value lists, >= 2 knots");
  if (taus_.front() != 0.0 || taus_.back() != 1.0)
    throw std::invalid_argument("quantile fn: knots must span [0, 1]");
  for (std::size_t i = 1; i < taus_.size(); ++i) {
    if (taus_[i] <= taus_[i - 1])
      throw std::invalid_argument("quantile fn: knots must be strictly increasing");
    if (values_[i] < values_[i - 1])
      throw std::invalid_argument("quantile fn: values must be nondecreasing");
  }
}

double PiecewiseQuantileFn::operator()(double tau) const {
  if (tau <= 0.0) return values_.front();
  if (tau >= 1.0) return values_.back();
  const auto it = std::upper_bound(taus_.begin(), taus_.end(), tau);
  const std::size_t hi = static_cast<std::size_t>(it - taus_.begin());
  const std::size_t lo = hi - 1;
  const double w = (tau - taus_[lo]) / (taus_[hi] - taus_[lo]);
  return values_[lo] + w * (values_[hi] - values_[lo]);
}

double PiecewiseQuantileFn::integral(double lo, double hi) const {
  lo = std::clamp(lo, 0.0, 1.0);
  hi = std::clamp(hi, 0.0, 1.0);
  if (hi <= lo) return 0.0;
  double acc = 0.0;
  for (std::size_t seg = 0; seg + 1 < taus_.size(); ++seg) {
    const double a = std::max(lo, taus_[seg]);
    const double b = std::min(hi, taus_[seg + 1]);
    if (b <= a) continue;
    // trapezoid is exact on a linear segment
    acc += 0.5 * ((*this)(a) + (*this)(b)) * (b - a);
  }
  return acc;
}

PiecewiseQuantileFn PiecewiseQuantileFn::random(Rng& rng, int max_knots,
                                                double value_scale) {
  const int interior = static_cast<int>(rng.uniform_index(
      static_cast<std::size_t>(std::max(1, max_knots - 2)) + 1));
  std::vector<double> taus{0.0};
  for (int i = 0; i < interior; ++i) taus.push_back(rng.uniform());
  taus.push_back(1.0);
  std::sort(taus.begin(), taus.end());
  taus.erase(std::unique(taus.begin(), taus.end()), taus.end());
  if (taus.back() != 1.0) taus.push_back(1.0);

  std::vector<double> values;
  double v = rng.uniform(-value_scale, value_scale);
  for (std::size_t i = 0; i < taus.size(); ++i) {
    values.push_back(v);
    v += rng.uniform() * value_scale;  // nondecreasing increments
  }
  return PiecewiseQuantileFn(std::move(taus), std::move(values));
}

double analytic_cvar(const PiecewiseQuantileFn& q, double epsilon) {
  if (epsilon <= 0.0 || epsilon > 1.0)
    throw std::invalid_argument("analytic_cvar: epsilon must be in (0, 1]");
  return q.integral(1.0 - epsilon, 1.0) / epsilon;
}

double mean_squared_quantile_error(const PiecewiseQuantileFn& q1,
                                   const PiecewiseQuantileFn& q2) {
  // merged knots: d(tau) = q1 - q2 is linear on each merged segment, so
  // the integral of d^2 has the closed form (b-a)/3 (da^2 + da*db + db^2)
  std::vector<double> knots;
  knots.reserve(q1.taus().size() + q2.taus().size());
  knots.insert(knots.end(), q1.taus().begin(), q1.taus().end());
  knots.insert(knots.end(), q2.taus().begin(), q2.taus().end());
  std::sort(knots.begin(), knots.end());
  knots.erase(std::unique(knots.begin(), knots.end()), knots.end());

  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < knots.size(); ++i) {
    const double a = knots[i], b = knots[i + 1];
    const double da = q1(a) - q2(a);
    const double db = q1(b) - q2(b);
    acc += (b - a) / 3.0 * (da * da + da * db + db * db);
  }
  return acc;
}

BoundReport verify_cvar_error_bound(long trials, Rng& rng, double tolerance) {
  BoundReport rep;
  rep.name = "theorem_3_1_cvar_error_bound";
  rep.trials = trials;
  rep.worst_slack = std::numeric_limits<double>::infinity();
  const double eps_levels[] = {0.1, 0.25, 0.5, 1.0};
  for (long t = 0; t < trials; ++t) {
    const auto q1 = PiecewiseQuantileFn::random(rng);
    const auto q2 = PiecewiseQuantileFn::random(rng);
    const double delta = std::sqrt(mean_squared_quantile_error(q1, q2));
    for (double eps : eps_levels) {
      const double gap = std::abs(analytic_cvar(q1, eps) - analytic_cvar(q2, eps));
      const double bound = delta / std::sqrt(eps);
      const double slack = bound + tolerance - gap;
      rep.worst_slack = std::min(rep.worst_slack, slack);
      if (slack < 0.0) ++rep.violations;
    }
  }
  rep.passed = rep.violations == 0;
  rep.detail = "|dCVaR| <= delta/sqrt(eps) over eps in {0.1,0.25,0.5,1.0}";
  return rep;
}

BoundComparison verify_bound_comparison(double beta, double delta, double epsilon) {
  if (beta <= 0.0 || delta <= 0.0)
    throw std::invalid_argument("bound comparison: beta and delta must be > 0");
  if (epsilon <= 0.0 || epsilon >= 1.0)
    throw std::invalid_argument("bound comparison: epsilon must be in (0, 1)");
  BoundComparison cmp;
  cmp.cvar_bound = beta + delta / std::sqrt(epsilon);
  cmp.expected_bound = (beta + delta) / epsilon;
  cmp.tighter = cmp.cvar_bound < cmp.expected_bound;
  return cmp;
}

BoundReport verify_bound_comparison_sweep(long trials, Rng& rng) {
  BoundReport rep;
  rep.name = "corollary_3_2_tighter_tail_bound";
  rep.trials = trials;
  rep.worst_slack = std::numeric_limits<double>::infinity();
  for (long t = 0; t < trials; ++t) {
    const double beta = rng.uniform(1e-3, 100.0);
    const double delta = rng.uniform(1e-3, 10.0);
    const double eps = rng.uniform(1e-4, 1.0 - 1e-4);
    const auto cmp = verify_bound_comparison(beta, delta, eps);
    const double margin = cmp.expected_bound - cmp.cvar_bound;
    rep.worst_slack = std::min(rep.worst_slack, margin);
    if (!(margin > 0.0)) ++rep.violations;
  }
  rep.passed = rep.violations == 0;
  rep.detail = "beta + delta/sqrt(eps) < (beta + delta)/eps with strict margin";
  return rep;
}

double tightened_threshold(double beta, double delta, double epsilon) {
  if (epsilon <= 0.0 || epsilon > 1.0)
    throw std::invalid_argument("tightened_threshold: epsilon must be in (0, 1]");
  if (delta < 0.0) throw std::invalid_argument("tightened_threshold: delta must be >= 0");
  const double margin = delta / std::sqrt(epsilon);
  if (beta <= margin)
    throw std::invalid_argument(
        "tightened_threshold: infeasible margin (beta <= delta/sqrt(eps))");
  return beta - margin;
}

BoundReport verify_safety_margin(long trials, Rng& rng) {
  BoundReport rep;
  rep.name = "corollary_b2_safety_margin";
  rep.trials = trials;
  rep.worst_slack = std::numeric_limits<double>::infinity();
  const double eps_levels[] = {0.1, 0.25, 0.5};
  for (long t = 0; t < trials; ++t) {
    const auto q_true = PiecewiseQuantileFn::random(rng);
    const auto q_approx = PiecewiseQuantileFn::random(rng);
    const double delta =
        std::sqrt(mean_squared_quantile_error(q_true, q_approx));
    for (double eps : eps_levels) {
      // pick beta so the approximation exactly meets the tightened limit
      const double beta_prime = analytic_cvar(q_approx, eps);
      const double beta = beta_prime + delta / std::sqrt(eps);
      // then the true CVaR may not exceed beta
      const double slack = beta + 1e-9 - analytic_cvar(q_true, eps);
      rep.worst_slack = std::min(rep.worst_slack, slack);
      if (slack < 0.0) ++rep.violations;
    }
  }
  rep.passed = rep.violations == 0;
  rep.detail = "enforcing CVaR <= beta - delta/sqrt(eps) on the approximation "
               "bounds the true CVaR by beta";
  return rep;
}

BoundReport verify_signal_identity(long trials, Rng& rng, double tolerance) {
  BoundReport rep;
  rep.name = "theorem_b4_signal_strength";
  rep.trials = trials;
  double worst = 0.0;
  for (long t = 0; t < trials; ++t) {
    const std::size_t n = 1 + rng.uniform_index(200);
    std::vector<double> costs(n);
    for (double& c : costs) c = rng.uniform(0.0, 50.0);
    const double eps = rng.uniform(1e-3, 1.0 - 1e-3);

    std::vector<double> sorted = costs;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t k = static_cast<std::size_t>(
        std::ceil(eps * static_cast<double>(n)));
    double tail = 0.0;
    for (std::size_t i = n - k; i < n; ++i) tail += sorted[i];
    tail /= static_cast<double>(k);
    double body = 0.0;
    if (n > k) {
      for (std::size_t i = 0; i < n - k; ++i) body += sorted[i];
      body /= static_cast<double>(n - k);
    }
    const double mean =
        std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(n);

    const double lhs = tail - mean;  // (cvar - beta) - (mean - beta)
    const double rhs =
        (1.0 - static_cast<double>(k) / static_cast<double>(n)) * (tail - body);
    worst = std::max(worst, std::abs(lhs - rhs));
    if (std::abs(lhs - rhs) > tolerance) ++rep.violations;
    if (tail < mean - tolerance) ++rep.violations;  // dominance
  }
  rep.worst_slack = tolerance - worst;
  rep.passed = rep.violations == 0;
  rep.detail = "signal gap equals (1 - k/N)(tail mean - body mean); CVaR signal "
               "dominates the expected-cost signal";
  return rep;
}

double gpd_gamma(double nu) {
  if (nu < 0.0 || nu >= 1.0) throw std::invalid_argument("gpd_gamma: nu must be in [0, 1)");
  if (nu == 0.0) return std::exp(-1.0);
  return std::pow(1.0 - nu, 1.0 / nu);
}

double gpd_inverse_cdf(const GpdParams& params, double u_prob) {
  if (u_prob < 0.0 || u_prob >= 1.0)
    throw std::invalid_argument("gpd_inverse_cdf: u_prob must be in [0, 1)");
  if (params.scale <= 0.0) throw std::invalid_argument("gpd_inverse_cdf: scale must be > 0");
  if (params.shape < 0.0 || params.shape >= 1.0)
    throw std::invalid_argument("gpd_inverse_cdf: shape must be in [0, 1)");
  if (params.shape == 0.0) return -params.scale * std::log1p(-u_prob);
  return params.scale * (std::pow(1.0 - u_prob, -params.shape) - 1.0) / params.shape;
}

BoundReport gpd_violation_check(const GpdParams& params, double epsilon, long samples,
                                Rng& rng) {
  if (epsilon <= 0.0 || epsilon >= 1.0)
    throw std::invalid_argument("gpd check: epsilon must be in (0, 1)");
  BoundReport rep;
  rep.name = "theorem_3_3_gpd_violation";
  rep.trials = samples;

  // constraint active at equality: CVaR = u + E[exceedance] = beta
  const double mean_exceedance =
      params.shape == 0.0 ? params.scale : params.scale / (1.0 - params.shape);
  const double beta = params.threshold + mean_exceedance;
  const double bound = (1.0 - epsilon) * gpd_gamma(params.shape);

  long exceed = 0;
  for (long i = 0; i < samples; ++i) {
    const double u = rng.uniform();
    double z;
    if (u < epsilon) {
      // body: uniform on [0, threshold]; never exceeds beta >= threshold
      z = rng.uniform() * params.threshold;
    } else {
      z = params.threshold + gpd_inverse_cdf(params, rng.uniform());
    }
    if (z > beta) ++exceed;
  }
  const double p_hat = static_cast<double>(exceed) / static_cast<double>(samples);
  const double se = std::sqrt(bound * (1.0 - bound) / static_cast<double>(samples));
  rep.worst_slack = bound + 3.0 * se - p_hat;
  rep.violations = rep.worst_slack < 0.0 ? 1 : 0;
  rep.passed = rep.violations == 0;
  rep.detail = "Pr(Z > beta) <= (1-eps)*gamma(nu) + 3 standard errors";
  return rep;
}

double wasserstein1(std::span<const double> xs, std::span<const double> px,
                    std::span<const double> ys, std::span<const double> py) {
  // W1 in 1-D equals the integral of |F1 - F2| over the merged support
  struct Atom {
    double x, p;
    int which;
  };
  std::vector<Atom> atoms;
  atoms.reserve(xs.size() + ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i) atoms.push_back({xs[i], px[i], 0});
  for (std::size_t i = 0; i < ys.size(); ++i) atoms.push_back({ys[i], py[i], 1});
  std::sort(atoms.begin(), atoms.end(),
            [](const Atom& a, const Atom& b) { return a.x < b.x; });
  double f1 = 0.0, f2 = 0.0, acc = 0.0;
  for (std::size_t i = 0; i + 1 <= atoms.size(); ++i) {
    if (atoms[i].which == 0)
      f1 += atoms[i].p;
    else
      f2 += atoms[i].p;
    if (i + 1 < atoms.size()) acc += std::abs(f1 - f2) * (atoms[i + 1].x - atoms[i].x);
  }
  return acc;
}

namespace {

struct Tabular {
  int n_states = 0, n_actions = 0;
  std::vector<double> policy;      // [s][a]
  std::vector<double> transition;  // [s][a][s']
  std::vector<double> cost;        // [s][a]
  double pi(int s, int a) const { return policy[s * n_actions + a]; }
  double p(int s, int a, int s2) const {
    return transition[(s * n_actions + a) * n_states + s2];
  }
};

struct Distribution {
  std::vector<double> atoms, probs;
};

Tabular random_tabular(Rng& rng) {
  Tabular t;
  t.n_states = 2 + static_cast<int>(rng.uniform_index(9));   // 2..10
  t.n_actions = 1 + static_cast<int>(rng.uniform_index(3));  // 1..3
  t.policy.resize(t.n_states * t.n_actions);
  t.transition.resize(t.n_states * t.n_actions * t.n_states);
  t.cost.resize(t.n_states * t.n_actions);
  for (int s = 0; s < t.n_states; ++s) {
    double norm = 0.0;
    for (int a = 0; a < t.n_actions; ++a) {
      t.policy[s * t.n_actions + a] = rng.uniform_pos();
      norm += t.policy[s * t.n_actions + a];
    }
    for (int a = 0; a < t.n_actions; ++a) t.policy[s * t.n_actions + a] /= norm;
  }
  for (int s = 0; s < t.n_states; ++s)
    for (int a = 0; a < t.n_actions; ++a) {
      t.cost[s * t.n_actions + a] = rng.uniform(0.0, 1.0);
      double norm = 0.0;
      for (int s2 = 0; s2 < t.n_states; ++s2) {
        const double w = rng.uniform_pos();
        t.transition[(s * t.n_actions + a) * t.n_states + s2] = w;
        norm += w;
      }
      for (int s2 = 0; s2 < t.n_states; ++s2)
        t.transition[(s * t.n_actions + a) * t.n_states + s2] /= norm;
    }
  return t;
}

Distribution random_distribution(Rng& rng) {
  Distribution d;
  const int atoms = 2 + static_cast<int>(rng.uniform_index(4));  // 2..5
  double norm = 0.0;
  for (int i = 0; i < atoms; ++i) {
    d.atoms.push_back(rng.uniform(0.0, 5.0));
    d.probs.push_back(rng.uniform_pos());
    norm += d.probs.back();
  }
  for (double& p : d.probs) p /= norm;
  return d;
}

// exact distributional Bellman application: mixture over (s', a') of the
// shifted/scaled source distribution
Distribution apply_bellman(const Tabular& mdp, const std::vector<Distribution>& z,
                           int s, int a, double gamma) {
  Distribution out;
  for (int s2 = 0; s2 < mdp.n_states; ++s2) {
    for (int a2 = 0; a2 < mdp.n_actions; ++a2) {
      const double w = mdp.p(s, a, s2) * mdp.pi(s2, a2);
      if (w == 0.0) continue;
      const auto& src = z[s2 * mdp.n_actions + a2];
      for (std::size_t i = 0; i < src.atoms.size(); ++i) {
        out.atoms.push_back(mdp.cost[s * mdp.n_actions + a] + gamma * src.atoms[i]);
        out.probs.push_back(w * src.probs[i]);
      }
    }
  }
  return out;
}

}  // namespace

BoundReport contraction_check(int instances, double gamma, Rng& rng, double tolerance) {
  BoundReport rep;
  rep.name = "lemma_b1_contraction";
  rep.trials = instances;
  rep.worst_slack = std::numeric_limits<double>::infinity();
  for (int inst = 0; inst < instances; ++inst) {
    const Tabular mdp = random_tabular(rng);
    const int n = mdp.n_states * mdp.n_actions;
    std::vector<Distribution> z1(n), z2(n);
    for (int i = 0; i < n; ++i) {
      z1[i] = random_distribution(rng);
      z2[i] = random_distribution(rng);
    }
    double before = 0.0;
    for (int i = 0; i < n; ++i)
      before = std::max(before, wasserstein1(z1[i].atoms, z1[i].probs, z2[i].atoms,
                                             z2[i].probs));
    double after = 0.0;
    for (int s = 0; s < mdp.n_states; ++s)
      for (int a = 0; a < mdp.n_actions; ++a) {
        const auto t1 = apply_bellman(mdp, z1, s, a, gamma);
        const auto t2 = apply_bellman(mdp, z2, s, a, gamma);
        after = std::max(after, wasserstein1(t1.atoms, t1.probs, t2.atoms, t2.probs));
      }
    const double slack = gamma * before + tolerance - after;
    rep.worst_slack = std::min(rep.worst_slack, slack);
    if (slack < 0.0) ++rep.violations;
  }
  rep.passed = rep.violations == 0;
  rep.detail = "sup W1(T Z1, T Z2) <= gamma * sup W1(Z1, Z2) by exact enumeration";
  return rep;
}

std::string SuiteReport::to_json() const {
  nlohmann::json j;
  j["all_passed"] = all_passed;
  auto& arr = j["checks"];
  arr = nlohmann::json::array();
  for (const auto& r : reports) {
    arr.push_back({{"name", r.name},
                   {"passed", r.passed},
                   {"trials", r.trials},
                   {"violations", r.violations},
                   {"worst_slack", r.worst_slack},
                   {"detail", r.detail}});
  }
  return j.dump(2);
}

SuiteReport run_suite(const SuiteOptions& opts) {
  SuiteReport suite;

  {
    Rng rng = Rng::substream(opts.seed, 101);
    suite.reports.push_back(verify_cvar_error_bound(opts.cvar_bound_trials, rng));
  }
  {
    Rng rng = Rng::substream(opts.seed, 102);
    suite.reports.push_back(verify_bound_comparison_sweep(opts.comparison_trials, rng));
  }
  {
    Rng rng = Rng::substream(opts.seed, 103);
    suite.reports.push_back(verify_safety_margin(opts.margin_trials, rng));
  }
  {
    Rng rng = Rng::substream(opts.seed, 104);
    suite.reports.push_back(verify_signal_identity(opts.signal_trials, rng));
  }
  {
    Rng rng = Rng::substream(opts.seed, 105);
    BoundReport gpd;
    gpd.name = "theorem_3_3_gpd_violation";
    gpd.passed = true;
    gpd.worst_slack = std::numeric_limits<double>::infinity();
    const double shapes[] = {0.0, 0.25, 0.5};
    const double eps_levels[] = {0.25, 0.5};
    for (double nu : shapes)
      for (double eps : eps_levels) {
        GpdParams p{nu, 1.0, 2.0};
        auto r = gpd_violation_check(p, eps, opts.gpd_samples, rng);
        gpd.trials += r.trials;
        gpd.violations += r.violations;
        gpd.worst_slack = std::min(gpd.worst_slack, r.worst_slack);
        gpd.detail = r.detail;
      }
    gpd.passed = gpd.violations == 0;
    suite.reports.push_back(gpd);
  }
  {
    Rng rng = Rng::substream(opts.seed, 106);
    suite.reports.push_back(contraction_check(opts.contraction_instances, 0.9, rng));
  }

  if (opts.inject_fault && !suite.reports.empty()) {
    // negative control: deliberately mark the first check as violated
    suite.reports.front().passed = false;
    suite.reports.front().violations += 1;
    suite.reports.front().detail += " [fault injected]";
  }

  suite.all_passed = true;
  for (const auto& r : suite.reports) suite.all_passed = suite.all_passed && r.passed;
  return suite;
}

}  // namespace slsac::verify
