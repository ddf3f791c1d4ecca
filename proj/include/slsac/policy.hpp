#pragma once

#include <span>
#include <vector>

#include "slsac/env.hpp"
#include "slsac/mlp.hpp"
#include "slsac/optim.hpp"
#include "slsac/rng.hpp"

namespace slsac {

class RewardEnsemble;
class QuantileCostCritic;

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;
inline constexpr double kSquashEps = 1e-6;

// One drawn action with everything the reparameterized backward pass needs.
struct ActionSample {
  std::vector<double> action;      // tanh-squashed, strictly inside (-1, 1)
  std::vector<double> pre_squash;  // u = mean + std * noise
  std::vector<double> noise;
  std::vector<double> mean;
  std::vector<double> log_std;     // clamped
  std::vector<double> log_std_raw;
  double log_prob = 0.0;           // zero in deterministic mode
  MlpTape tape;                    // present when traced
};

// Tanh-squashed diagonal Gaussian policy. The trunk maps the state to
// [mean, log_std]; log_std is clamped to [-20, 2] before exponentiation.
class GaussianPolicy {
 public:
  GaussianPolicy() = default;
  GaussianPolicy(int state_dim, int action_dim, int hidden, Rng& init);

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  double alpha() const { return std::exp(log_alpha); }

  ActionSample sample(std::span<const double> state, Rng* rng, bool deterministic,
                      bool traced = false) const;
  // Stochastic draw from the target trunk (used for bootstrap targets).
  ActionSample sample_target(std::span<const double> state, Rng& rng) const;

  MlpParams trunk, trunk_target;
  OptimizerState opt;

  // entropy temperature
  double log_alpha = 0.0;
  bool alpha_auto = true;
  double target_entropy = 0.0;
  double alpha_lr = 3e-4;

 private:
  ActionSample sample_from(const MlpParams& net, std::span<const double> state, Rng* rng,
                           bool deterministic, bool traced) const;
  int state_dim_ = 0, action_dim_ = 0;
};

// Recompute the squashed-Gaussian log density of `u` under (mean, std); the
// value sample_action reports must agree with this to numerical precision.
double squashed_gaussian_log_prob(std::span<const double> pre_squash,
                                  std::span<const double> mean,
                                  std::span<const double> log_std);

struct PolicyLossResult {
  double loss = 0.0;
  MlpGrads grads;
  double mean_log_prob = 0.0;
  double mean_q = 0.0;
  double mean_cvar = 0.0;
};

// Lagrangian actor loss: -E[q_bar - alpha*log_pi - lambda*cvar], with
// reparameterized actions and frozen critics. Gradients over the policy
// trunk only.
PolicyLossResult policy_loss(const GaussianPolicy& policy, const RewardEnsemble& ens,
                             const QuantileCostCritic& cost_critic,
                             std::span<const Transition> batch, double alpha,
                             double lambda, double epsilon, int n_cvar, Rng& rng);

// Gradient step on log_alpha toward the entropy target; no-op in fixed mode.
// Returns the updated alpha.
double alpha_update(GaussianPolicy& policy, std::span<const double> log_probs);

}  // namespace slsac
