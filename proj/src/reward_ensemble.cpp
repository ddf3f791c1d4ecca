#include "slsac/reward_ensemble.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace slsac {

Aggregation parse_aggregation(const std::string& name) {
  if (name == "mean_min") return Aggregation::MeanMin;
  if (name == "min_min") return Aggregation::MinMin;
  throw std::invalid_argument("unknown aggregation: " + name);
}

std::string to_string(Aggregation a) {
  return a == Aggregation::MeanMin ? "mean_min" : "min_min";
}

RewardEnsemble::RewardEnsemble(int pairs, int state_dim, int action_dim, int hidden,
                               Aggregation agg, std::uint64_t run_seed, Rng& init)
    : aggregation(agg), m_(pairs) {
  if (pairs <= 0) throw std::invalid_argument("RewardEnsemble: need at least one pair");
  const std::vector<int> dims = {state_dim + action_dim, hidden, hidden, 1};
  for (int i = 0; i < 2 * pairs; ++i) {
    MlpParams p(dims);
    init_uniform_fanin(p, init);
    critics.push_back(p);
    targets.push_back(p);
    opt.push_back(OptimizerState::sized_for(p));
    // independent per-critic noise stream so the update loop is
    // order-independent
    noise.push_back(Rng::substream(run_seed, 0xc0ff000 + static_cast<std::uint64_t>(i)));
  }
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

double RewardEnsemble::aggregate(const std::vector<MlpParams>& nets,
                                 std::span<const double> s, std::span<const double> a,
                                 std::vector<double>* action_grad) const {
  const auto sa = concat(s, a);
  const int action_dim = static_cast<int>(a.size());
  if (action_grad) action_grad->assign(action_dim, 0.0);

  std::vector<MlpTape> tapes(action_grad ? nets.size() : 0);
  std::vector<double> vals(nets.size());
  for (std::size_t i = 0; i < nets.size(); ++i)
    vals[i] = mlp_forward(nets[i], sa, action_grad ? &tapes[i] : nullptr)[0];

  auto add_action_grad = [&](std::size_t idx, double weight) {
    if (!action_grad) return;
    const double go[1] = {1.0};
    const auto gin = mlp_input_grad(nets[idx], tapes[idx], go);
    for (int k = 0; k < action_dim; ++k)
      (*action_grad)[k] += weight * gin[gin.size() - action_dim + k];
  };

  if (aggregation == Aggregation::MeanMin) {
    double acc = 0.0;
    for (int p = 0; p < m_; ++p) {
      const std::size_t lo = 2 * p, hi = 2 * p + 1;
      const std::size_t arg = vals[lo] <= vals[hi] ? lo : hi;
      acc += vals[arg];
      add_action_grad(arg, 1.0 / m_);
    }
    return acc / m_;
  }
  std::size_t arg = 0;
  for (std::size_t i = 1; i < nets.size(); ++i)
    if (vals[i] < vals[arg]) arg = i;
  add_action_grad(arg, 1.0);
  return vals[arg];
}

double RewardEnsemble::value(std::span<const double> s, std::span<const double> a,
                             std::vector<double>* action_grad) const {
  return aggregate(critics, s, a, action_grad);
}

double RewardEnsemble::target_value(std::span<const double> s,
                                    std::span<const double> a) const {
  return aggregate(targets, s, a, nullptr);
}

void RewardEnsemble::sync_targets() { targets = critics; }

void RewardEnsemble::soft_update_targets(double tau_soft) {
  for (int i = 0; i < size(); ++i) soft_update(critics[i], targets[i], tau_soft);
}

bool RewardEnsemble::all_finite() const {
  for (const auto& c : critics)
    if (!c.all_finite()) return false;
  return true;
}

std::vector<double> ensemble_target(const RewardEnsemble& ens,
                                    std::span<const Transition> batch,
                                    const GaussianPolicy& policy, double alpha,
                                    double gamma, Rng& rng) {
  if (batch.empty()) throw std::invalid_argument("ensemble_target: empty batch");
  std::vector<double> y(batch.size());
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Transition& tr = batch[b];
    if (tr.d) {
      y[b] = tr.r;
      continue;
    }
    const auto next = policy.sample_target(tr.s_next, rng);
    const double q = ens.target_value(tr.s_next, next.action);
    y[b] = tr.r + gamma * (q - alpha * next.log_prob);
  }
  return y;
}

std::vector<CriticLoss> ensemble_loss(const RewardEnsemble& ens,
                                      std::span<const Transition> batch,
                                      std::span<const double> targets) {
  if (batch.size() != targets.size())
    throw std::invalid_argument("ensemble_loss: batch/target length mismatch");
  if (batch.empty()) throw std::invalid_argument("ensemble_loss: empty batch");

  std::vector<CriticLoss> out(ens.critics.size());
  const double inv_b = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < ens.critics.size(); ++i) {
    const MlpParams& net = ens.critics[i];
    out[i].grads.flat.assign(net.size(), 0.0);
    MlpTape tape;
    for (std::size_t b = 0; b < batch.size(); ++b) {
      const auto sa = concat(batch[b].s, batch[b].a);
      const double q = mlp_forward(net, sa, &tape)[0];
      const double err = q - targets[b];
      out[i].loss += err * err;
      const double go[1] = {2.0 * err * inv_b};
      mlp_backward_accumulate(net, tape, go, out[i].grads);
    }
    out[i].loss *= inv_b;
  }
  return out;
}

EnsembleUpdateStats ensemble_update(RewardEnsemble& ens,
                                    std::span<const Transition> batch,
                                    const GaussianPolicy& policy, double alpha,
                                    double gamma, LangevinVariant variant,
                                    EnsembleOptimizer optimizer, Rng& target_rng) {
  const auto targets = ensemble_target(ens, batch, policy, alpha, gamma, target_rng);
  auto losses = ensemble_loss(ens, batch, targets);
  EnsembleUpdateStats stats;
  for (int i = 0; i < ens.size(); ++i) {
    if (optimizer == EnsembleOptimizer::AdamW) {
      adamw_step(ens.critics[i], losses[i].grads, ens.opt[i]);
    } else {
      langevin_step(ens.critics[i], losses[i].grads, ens.opt[i], variant, ens.noise[i]);
    }
    stats.mean_loss += losses[i].loss;
  }
  stats.mean_loss /= ens.size();
  return stats;
}

}  // namespace slsac
