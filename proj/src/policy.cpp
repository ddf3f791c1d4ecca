#include "slsac/policy.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "slsac/quantile_critic.hpp"
#include "slsac/reward_ensemble.hpp"

namespace slsac {

namespace {
constexpr double kLogTwoPi = 1.8378770664093454835606594728112;
}

GaussianPolicy::GaussianPolicy(int state_dim, int action_dim, int hidden, Rng& init)
    : state_dim_(state_dim), action_dim_(action_dim) {
  trunk = MlpParams({state_dim, hidden, hidden, 2 * action_dim});
  init_uniform_fanin(trunk, init);
  trunk_target = trunk;
  opt = OptimizerState::sized_for(trunk);
}

double squashed_gaussian_log_prob(std::span<const double> pre_squash,
                                  std::span<const double> mean,
                                  std::span<const double> log_std) {
  double lp = 0.0;
  for (std::size_t i = 0; i < pre_squash.size(); ++i) {
    const double std_dev = std::exp(log_std[i]);
    const double z = (pre_squash[i] - mean[i]) / std_dev;
    lp += -0.5 * z * z - log_std[i] - 0.5 * kLogTwoPi;
    const double a = std::tanh(pre_squash[i]);
    lp -= std::log(1.0 - a * a + kSquashEps);
  }
  return lp;
}

ActionSample GaussianPolicy::sample_from(const MlpParams& net,
                                         std::span<const double> state, Rng* rng,
                                         bool deterministic, bool traced) const {
  if (static_cast<int>(state.size()) != state_dim_)
    throw std::invalid_argument("policy sample: state dimension mismatch");
  ActionSample out;
  const auto raw = traced ? mlp_forward(net, state, &out.tape) : mlp_forward(net, state);
  out.mean.assign(raw.begin(), raw.begin() + action_dim_);
  out.log_std_raw.assign(raw.begin() + action_dim_, raw.end());
  out.log_std.resize(action_dim_);
  for (int i = 0; i < action_dim_; ++i)
    out.log_std[i] = std::clamp(out.log_std_raw[i], kLogStdMin, kLogStdMax);

  out.action.resize(action_dim_);
  out.pre_squash.resize(action_dim_);
  out.noise.assign(action_dim_, 0.0);
  if (deterministic) {
    for (int i = 0; i < action_dim_; ++i) {
      out.pre_squash[i] = out.mean[i];
      out.action[i] = std::tanh(out.mean[i]);
    }
    out.log_prob = 0.0;
    return out;
  }
  if (!rng) throw std::invalid_argument("policy sample: stochastic mode needs a generator");
  out.log_prob = 0.0;
  for (int i = 0; i < action_dim_; ++i) {
    const double n = rng->normal();
    const double std_dev = std::exp(out.log_std[i]);
    out.noise[i] = n;
    out.pre_squash[i] = out.mean[i] + std_dev * n;
    const double a = std::tanh(out.pre_squash[i]);
    out.action[i] = a;
    out.log_prob += -0.5 * n * n - out.log_std[i] - 0.5 * kLogTwoPi;
    out.log_prob -= std::log(1.0 - a * a + kSquashEps);
  }
  return out;
}

ActionSample GaussianPolicy::sample(std::span<const double> state, Rng* rng,
                                    bool deterministic, bool traced) const {
  return sample_from(trunk, state, rng, deterministic, traced);
}

ActionSample GaussianPolicy::sample_target(std::span<const double> state, Rng& rng) const {
  return sample_from(trunk_target, state, &rng, false, false);
}

PolicyLossResult policy_loss(const GaussianPolicy& policy, const RewardEnsemble& ens,
                             const QuantileCostCritic& cost_critic,
                             std::span<const Transition> batch, double alpha,
                             double lambda, double epsilon, int n_cvar, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("policy_loss: empty batch");
  const int adim = policy.action_dim();

  PolicyLossResult res;
  res.grads.flat.assign(policy.trunk.size(), 0.0);

  std::vector<double> cvar_taus(n_cvar);
  for (int k = 1; k <= n_cvar; ++k)
    cvar_taus[k - 1] = 1.0 - epsilon + epsilon * (k - 0.5) / n_cvar;
  std::vector<double> cvar_weights(n_cvar, 1.0 / n_cvar);

  std::vector<double> dl_da(adim), out_grad(2 * adim);
  for (const Transition& tr : batch) {
    const auto smp = policy.sample(tr.s, &rng, false, /*traced=*/true);

    // frozen reward critics, gradient through the action only
    std::vector<double> dq_da;
    const double q = ens.value(tr.s, smp.action, &dq_da);

    // frozen cost critic, stratified upper-tail grid
    double cvar = 0.0;
    std::vector<double> dc_da(adim, 0.0);
    const auto ev = cost_critic.quantiles_traced(tr.s, smp.action, cvar_taus);
    for (int k = 0; k < n_cvar; ++k) cvar += ev.values[k];
    cvar /= n_cvar;
    const auto gin = cost_critic.input_gradient(ev, cvar_weights);
    for (int k = 0; k < adim; ++k) dc_da[k] = gin[gin.size() - adim + k];

    // loss contribution: -(q - alpha*log_pi - lambda*cvar)
    res.loss += -(q - alpha * smp.log_prob - lambda * cvar);
    res.mean_log_prob += smp.log_prob;
    res.mean_q += q;
    res.mean_cvar += cvar;

    // chain rule through a = tanh(u), u = mean + std*noise
    for (int i = 0; i < adim; ++i) {
      const double a = smp.action[i];
      const double one_m_a2 = 1.0 - a * a;
      const double dl_da_i = -dq_da[i] + lambda * dc_da[i];
      // d(-log(1 - a^2 + eps))/du = 2 a (1 - a^2) / (1 - a^2 + eps)
      double dl_du = dl_da_i * one_m_a2 +
                     alpha * 2.0 * a * one_m_a2 / (one_m_a2 + kSquashEps);
      const double std_dev = std::exp(smp.log_std[i]);
      out_grad[i] = dl_du;  // d u / d mean = 1
      double dl_dlogstd = dl_du * std_dev * smp.noise[i] - alpha;
      // clamp gate on log_std
      if (smp.log_std_raw[i] <= kLogStdMin || smp.log_std_raw[i] >= kLogStdMax)
        dl_dlogstd = 0.0;
      out_grad[adim + i] = dl_dlogstd;
    }
    mlp_backward_accumulate(policy.trunk, smp.tape, out_grad, res.grads);
  }

  const double inv_b = 1.0 / static_cast<double>(batch.size());
  res.loss *= inv_b;
  res.grads.scale(inv_b);
  res.mean_log_prob *= inv_b;
  res.mean_q *= inv_b;
  res.mean_cvar *= inv_b;
  return res;
}

double alpha_update(GaussianPolicy& policy, std::span<const double> log_probs) {
  if (!policy.alpha_auto || log_probs.empty()) return policy.alpha();
  double mean = 0.0;
  for (double lp : log_probs) mean += lp;
  mean /= static_cast<double>(log_probs.size());
  // descent on E[-log_alpha * (log_pi + target_entropy)]
  policy.log_alpha += policy.alpha_lr * (mean + policy.target_entropy);
  policy.log_alpha = std::clamp(policy.log_alpha, -20.0, 5.0);
  return policy.alpha();
}

}  // namespace slsac
