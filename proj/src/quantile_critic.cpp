#include "slsac/quantile_critic.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <stdexcept>

namespace slsac {

double huber(double delta, double kappa) {
  if (kappa <= 0.0) throw std::invalid_argument("huber: kappa must be > 0");
  const double ad = std::abs(delta);
  return ad <= kappa ? 0.5 * delta * delta : kappa * (ad - 0.5 * kappa);
}

double huber_derivative(double delta, double kappa) {
  const double ad = std::abs(delta);
  if (ad <= kappa) return delta;
  return delta > 0.0 ? kappa : -kappa;
}

double quantile_huber(double delta, double tau, double kappa) {
  const double w = std::abs(tau - (delta < 0.0 ? 1.0 : 0.0));
  return w * huber(delta, kappa);
}

double quantile_huber_derivative(double delta, double tau, double kappa) {
  const double w = std::abs(tau - (delta < 0.0 ? 1.0 : 0.0));
  return w * huber_derivative(delta, kappa);
}

double empirical_cvar(std::span<const double> samples, double epsilon) {
  if (samples.empty()) throw std::invalid_argument("empirical_cvar: empty sample set");
  if (epsilon <= 0.0 || epsilon > 1.0)
    throw std::invalid_argument("empirical_cvar: epsilon must be in (0, 1]");
  const std::size_t n = samples.size();
  const std::size_t k = static_cast<std::size_t>(
      std::ceil(epsilon * static_cast<double>(n)));
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  double acc = 0.0;
  for (std::size_t i = n - k; i < n; ++i) acc += sorted[i];
  return acc / static_cast<double>(k);
}

std::vector<double> cosine_features(double tau, int dim) {
  if (tau < 0.0 || tau > 1.0)
    throw std::invalid_argument("cosine_features: tau must be in [0, 1]");
  std::vector<double> f(dim);
  constexpr double pi = 3.141592653589793238462643383279502884;
  for (int i = 0; i < dim; ++i) f[i] = std::cos(pi * i * tau);
  return f;
}

void CostCriticGrads::zero() {
  trunk.zero();
  std::fill(embed_w.begin(), embed_w.end(), 0.0);
  std::fill(embed_b.begin(), embed_b.end(), 0.0);
  head.zero();
}

void CostCriticGrads::scale(double s) {
  trunk.scale(s);
  for (double& g : embed_w) g *= s;
  for (double& g : embed_b) g *= s;
  head.scale(s);
}

bool CostCriticGrads::all_finite() const {
  auto fin = [](std::span<const double> xs) {
    for (double x : xs)
      if (!std::isfinite(x)) return false;
    return true;
  };
  return trunk.all_finite() && head.all_finite() && fin(embed_w) && fin(embed_b);
}

QuantileCostCritic::QuantileCostCritic(int state_dim, int action_dim, int hidden,
                                       int embed_dim, Rng& init)
    : state_dim_(state_dim), action_dim_(action_dim), hidden_dim_(hidden),
      embed_dim_(embed_dim) {
  trunk = MlpParams({state_dim + action_dim, hidden}, Activation::Relu, Activation::Relu);
  head = MlpParams({hidden, hidden, 1}, Activation::Relu, Activation::Identity);
  init_uniform_fanin(trunk, init);
  init_uniform_fanin(head, init);
  embed_w.resize(static_cast<std::size_t>(hidden) * embed_dim);
  embed_b.resize(hidden);
  const double bound = 1.0 / std::sqrt(static_cast<double>(embed_dim));
  for (double& w : embed_w) w = init.uniform(-bound, bound);
  for (double& b : embed_b) b = init.uniform(-bound, bound);
  sync_targets();
}

std::size_t QuantileCostCritic::param_count() const {
  return trunk.size() + embed_w.size() + embed_b.size() + head.size();
}

void QuantileCostCritic::sync_targets() {
  trunk_target = trunk;
  embed_w_target = embed_w;
  embed_b_target = embed_b;
  head_target = head;
}

void QuantileCostCritic::soft_update_targets(double tau_soft) {
  soft_update(trunk, trunk_target, tau_soft);
  soft_update(head, head_target, tau_soft);
  for (std::size_t i = 0; i < embed_w.size(); ++i)
    embed_w_target[i] = (1.0 - tau_soft) * embed_w_target[i] + tau_soft * embed_w[i];
  for (std::size_t i = 0; i < embed_b.size(); ++i)
    embed_b_target[i] = (1.0 - tau_soft) * embed_b_target[i] + tau_soft * embed_b[i];
}

bool QuantileCostCritic::all_finite() const {
  auto fin = [](std::span<const double> xs) {
    for (double x : xs)
      if (!std::isfinite(x)) return false;
    return true;
  };
  return trunk.all_finite() && head.all_finite() && fin(embed_w) && fin(embed_b);
}

std::vector<double> QuantileCostCritic::quantile_embedding(double tau,
                                                           bool use_target) const {
  const auto f = cosine_features(tau, embed_dim_);
  const auto& ew = use_target ? embed_w_target : embed_w;
  const auto& eb = use_target ? embed_b_target : embed_b;
  std::vector<double> e(hidden_dim_);
  for (int o = 0; o < hidden_dim_; ++o) {
    const double* row = ew.data() + static_cast<std::size_t>(o) * embed_dim_;
    double acc = eb[o];
    for (int i = 0; i < embed_dim_; ++i) acc += row[i] * f[i];
    e[o] = acc > 0.0 ? acc : 0.0;
  }
  return e;
}

namespace {

std::vector<double> concat(std::span<const double> s, std::span<const double> a) {
  std::vector<double> sa;
  sa.reserve(s.size() + a.size());
  sa.insert(sa.end(), s.begin(), s.end());
  sa.insert(sa.end(), a.begin(), a.end());
  return sa;
}

}  // namespace

std::vector<double> QuantileCostCritic::forward_with(
    const MlpParams& trunk_net, std::span<const double> ew, std::span<const double> eb,
    const MlpParams& head_net, std::span<const double> s, std::span<const double> a,
    std::span<const double> taus) const {
  const auto sa = concat(s, a);
  const auto h = mlp_forward(trunk_net, sa);
  std::vector<double> out(taus.size());
  std::vector<double> gated(hidden_dim_);
  for (std::size_t t = 0; t < taus.size(); ++t) {
    const auto f = cosine_features(taus[t], embed_dim_);
    for (int o = 0; o < hidden_dim_; ++o) {
      const double* row = ew.data() + static_cast<std::size_t>(o) * embed_dim_;
      double acc = eb[o];
      for (int i = 0; i < embed_dim_; ++i) acc += row[i] * f[i];
      gated[o] = (acc > 0.0 ? acc : 0.0) * h[o];
    }
    out[t] = mlp_forward(head_net, gated)[0];
  }
  return out;
}

std::vector<double> QuantileCostCritic::quantiles(std::span<const double> s,
                                                  std::span<const double> a,
                                                  std::span<const double> taus) const {
  return forward_with(trunk, embed_w, embed_b, head, s, a, taus);
}

std::vector<double> QuantileCostCritic::target_quantiles(
    std::span<const double> s, std::span<const double> a,
    std::span<const double> taus) const {
  return forward_with(trunk_target, embed_w_target, embed_b_target, head_target, s, a,
                      taus);
}

CostCriticEval QuantileCostCritic::quantiles_traced(std::span<const double> s,
                                                    std::span<const double> a,
                                                    std::vector<double> taus) const {
  CostCriticEval ev;
  ev.taus = std::move(taus);
  const auto sa = concat(s, a);
  ev.trunk_out = mlp_forward(trunk, sa, &ev.trunk_tape);
  const std::size_t n = ev.taus.size();
  ev.cosines.resize(n);
  ev.embed_pre.resize(n);
  ev.head_tapes.resize(n);
  ev.values.resize(n);
  std::vector<double> gated(hidden_dim_);
  for (std::size_t t = 0; t < n; ++t) {
    ev.cosines[t] = cosine_features(ev.taus[t], embed_dim_);
    auto& pre = ev.embed_pre[t];
    pre.resize(hidden_dim_);
    for (int o = 0; o < hidden_dim_; ++o) {
      const double* row = embed_w.data() + static_cast<std::size_t>(o) * embed_dim_;
      double acc = embed_b[o];
      for (int i = 0; i < embed_dim_; ++i) acc += row[i] * ev.cosines[t][i];
      pre[o] = acc;
      gated[o] = (acc > 0.0 ? acc : 0.0) * ev.trunk_out[o];
    }
    ev.values[t] = mlp_forward(head, gated, &ev.head_tapes[t])[0];
  }
  return ev;
}

void QuantileCostCritic::backward(const CostCriticEval& eval, std::span<const double> dl_dz,
                                  CostCriticGrads& grads,
                                  std::vector<double>* input_grad) const {
  if (dl_dz.size() != eval.taus.size())
    throw std::invalid_argument("cost critic backward: dl_dz size mismatch");
  std::vector<double> d_trunk_out(hidden_dim_, 0.0);
  std::vector<double> d_g;
  for (std::size_t t = 0; t < eval.taus.size(); ++t) {
    const double w = dl_dz[t];
    if (w == 0.0) continue;
    const double go[1] = {w};
    mlp_backward_accumulate(head, eval.head_tapes[t], go, grads.head, &d_g);
    // product rule: gated = relu(embed_pre) * trunk_out
    for (int o = 0; o < hidden_dim_; ++o) {
      const double e = eval.embed_pre[t][o] > 0.0 ? eval.embed_pre[t][o] : 0.0;
      d_trunk_out[o] += d_g[o] * e;
      const double d_e = d_g[o] * eval.trunk_out[o];
      if (eval.embed_pre[t][o] > 0.0 && d_e != 0.0) {
        double* row = grads.embed_w.data() + static_cast<std::size_t>(o) * embed_dim_;
        for (int i = 0; i < embed_dim_; ++i) row[i] += d_e * eval.cosines[t][i];
        grads.embed_b[o] += d_e;
      }
    }
  }
  mlp_backward_accumulate(trunk, eval.trunk_tape, d_trunk_out, grads.trunk, input_grad);
}

std::vector<double> QuantileCostCritic::input_gradient(const CostCriticEval& eval,
                                                       std::span<const double> dl_dz) const {
  if (dl_dz.size() != eval.taus.size())
    throw std::invalid_argument("cost critic input_gradient: dl_dz size mismatch");
  std::vector<double> d_trunk_out(hidden_dim_, 0.0);
  for (std::size_t t = 0; t < eval.taus.size(); ++t) {
    const double w = dl_dz[t];
    if (w == 0.0) continue;
    const double go[1] = {w};
    const auto d_g = mlp_input_grad(head, eval.head_tapes[t], go);
    for (int o = 0; o < hidden_dim_; ++o) {
      const double e = eval.embed_pre[t][o] > 0.0 ? eval.embed_pre[t][o] : 0.0;
      d_trunk_out[o] += d_g[o] * e;
    }
  }
  return mlp_input_grad(trunk, eval.trunk_tape, d_trunk_out);
}

CostCriticGrads QuantileCostCritic::zero_grads() const {
  CostCriticGrads g;
  g.trunk.flat.assign(trunk.size(), 0.0);
  g.embed_w.assign(embed_w.size(), 0.0);
  g.embed_b.assign(embed_b.size(), 0.0);
  g.head.flat.assign(head.size(), 0.0);
  return g;
}

double cvar_from_quantile_fn(const std::function<double(double)>& quantile_at,
                             double epsilon, int n, CvarMode mode, Rng* rng) {
  if (epsilon <= 0.0 || epsilon > 1.0)
    throw std::invalid_argument("cvar: epsilon must be in (0, 1]");
  if (n < 1) throw std::invalid_argument("cvar: need at least one quantile sample");
  double acc = 0.0;
  if (mode == CvarMode::Stratified) {
    for (int k = 1; k <= n; ++k) {
      const double tau = 1.0 - epsilon + epsilon * (k - 0.5) / n;
      acc += quantile_at(tau);
    }
  } else {
    if (!rng) throw std::invalid_argument("cvar: sampled mode needs a generator");
    for (int k = 0; k < n; ++k) acc += quantile_at(rng->uniform(1.0 - epsilon, 1.0));
  }
  return acc / n;
}

double QuantileCostCritic::cvar(std::span<const double> s, std::span<const double> a,
                                double epsilon, int n, CvarMode mode, Rng* rng) const {
  if (epsilon <= 0.0 || epsilon > 1.0)
    throw std::invalid_argument("cvar: epsilon must be in (0, 1]");
  if (n < 1) throw std::invalid_argument("cvar: need at least one quantile sample");
  std::vector<double> taus(n);
  if (mode == CvarMode::Stratified) {
    for (int k = 1; k <= n; ++k) taus[k - 1] = 1.0 - epsilon + epsilon * (k - 0.5) / n;
  } else {
    if (!rng) throw std::invalid_argument("cvar: sampled mode needs a generator");
    for (int k = 0; k < n; ++k) taus[k] = rng->uniform(1.0 - epsilon, 1.0);
  }
  const auto z = quantiles(s, a, taus);
  return std::accumulate(z.begin(), z.end(), 0.0) / n;
}

namespace {

CostLossResult cost_loss_impl(const QuantileCostCritic& critic,
                              std::span<const Transition> batch,
                              const std::function<std::vector<double>(std::size_t)>& next_action,
                              const std::function<void(std::vector<double>&)>& fill_taus,
                              const std::function<void(std::vector<double>&)>& fill_taus_target,
                              int n, int n_target, double gamma_c, double kappa) {
  if (batch.empty()) throw std::invalid_argument("cost_critic_loss: empty batch");
  CostLossResult res;
  res.grads = critic.zero_grads();
  std::vector<double> taus(n), taus_t(n_target), dl_dz(n);

  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Transition& tr = batch[b];
    fill_taus(taus);
    fill_taus_target(taus_t);

    std::vector<double> target_vals(n_target, 0.0);
    if (!tr.d && gamma_c != 0.0) {
      const auto a_next = next_action(b);
      target_vals = critic.target_quantiles(tr.s_next, a_next, taus_t);
    }
    auto ev = critic.quantiles_traced(tr.s, tr.a, taus);

    std::fill(dl_dz.begin(), dl_dz.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n_target; ++j) {
        const double target = tr.c + gamma_c * (tr.d ? 0.0 : 1.0) * target_vals[j];
        const double delta = target - ev.values[i];
        res.loss += quantile_huber(delta, taus[i], kappa);
        dl_dz[i] -= quantile_huber_derivative(delta, taus[i], kappa);
      }
    }
    critic.backward(ev, dl_dz, res.grads);
  }
  const double scale = 1.0 / (static_cast<double>(batch.size()) * n * n_target);
  res.loss *= scale;
  res.grads.scale(scale);
  return res;
}

}  // namespace

CostLossResult cost_critic_loss(const QuantileCostCritic& critic,
                                std::span<const Transition> batch,
                                const GaussianPolicy& policy, int n, int n_target,
                                double gamma_c, double kappa, Rng& rng) {
  return cost_loss_impl(
      critic, batch,
      [&](std::size_t b) { return policy.sample(batch[b].s_next, &rng, false).action; },
      [&](std::vector<double>& t) {
        for (double& x : t) x = rng.uniform();
      },
      [&](std::vector<double>& t) {
        for (double& x : t) x = rng.uniform();
      },
      n, n_target, gamma_c, kappa);
}

CostLossResult cost_critic_loss_with_taus(const QuantileCostCritic& critic,
                                          std::span<const Transition> batch,
                                          std::span<const std::vector<double>> next_actions,
                                          std::span<const double> taus,
                                          std::span<const double> taus_target,
                                          double gamma_c, double kappa) {
  if (next_actions.size() != batch.size())
    throw std::invalid_argument("cost_critic_loss: one next action per transition required");
  return cost_loss_impl(
      critic, batch, [&](std::size_t b) { return next_actions[b]; },
      [&](std::vector<double>& t) { std::copy(taus.begin(), taus.end(), t.begin()); },
      [&](std::vector<double>& t) {
        std::copy(taus_target.begin(), taus_target.end(), t.begin());
      },
      static_cast<int>(taus.size()), static_cast<int>(taus_target.size()), gamma_c,
      kappa);
}

}  // namespace slsac
