#pragma once

#include <functional>
#include <span>
#include <vector>

#include "slsac/env.hpp"
#include "slsac/mlp.hpp"
#include "slsac/policy.hpp"
#include "slsac/rng.hpp"

namespace slsac {

// Huber loss with threshold kappa.
double huber(double delta, double kappa);
double huber_derivative(double delta, double kappa);

// Asymmetric quantile-weighted Huber: |tau - 1{delta<0}| * L_kappa(delta).
double quantile_huber(double delta, double tau, double kappa);
double quantile_huber_derivative(double delta, double tau, double kappa);

// Mean of the largest ceil(epsilon*N) samples.
double empirical_cvar(std::span<const double> samples, double epsilon);

// cos(pi * i * tau), i = 0..dim-1.
std::vector<double> cosine_features(double tau, int dim);

enum class CvarMode { Stratified, Sampled };

struct CostCriticGrads {
  MlpGrads trunk;
  std::vector<double> embed_w, embed_b;
  MlpGrads head;

  void zero();
  void scale(double s);
  bool all_finite() const;
};

// Forward record for one (s, a) and a set of quantile fractions.
struct CostCriticEval {
  MlpTape trunk_tape;
  std::vector<double> trunk_out;
  std::vector<double> taus;
  std::vector<std::vector<double>> cosines;    // per tau
  std::vector<std::vector<double>> embed_pre;  // per tau, pre-ReLU
  std::vector<MlpTape> head_tapes;             // per tau
  std::vector<double> values;                  // per tau
};

// IQN-style distributional cost critic: a trunk over (s ++ a) producing a
// feature vector, a cosine quantile embedding projected to the same width,
// an elementwise product, and a scalar head. Maintains frozen target copies
// of all three components.
class QuantileCostCritic {
 public:
  QuantileCostCritic() = default;
  QuantileCostCritic(int state_dim, int action_dim, int hidden, int embed_dim, Rng& init);

  int state_dim() const { return state_dim_; }
  int action_dim() const { return action_dim_; }
  int hidden_dim() const { return hidden_dim_; }
  int embed_dim() const { return embed_dim_; }

  // Quantile embedding after projection + ReLU (tau in [0, 1]).
  std::vector<double> quantile_embedding(double tau, bool use_target = false) const;

  // One cost-return quantile value per tau.
  std::vector<double> quantiles(std::span<const double> s, std::span<const double> a,
                                std::span<const double> taus) const;
  std::vector<double> target_quantiles(std::span<const double> s,
                                       std::span<const double> a,
                                       std::span<const double> taus) const;

  CostCriticEval quantiles_traced(std::span<const double> s, std::span<const double> a,
                                  std::vector<double> taus) const;
  // dl_dz: dLoss/dZ per tau. Accumulates into `grads`; optionally also the
  // gradient w.r.t. the concatenated (s, a) input.
  void backward(const CostCriticEval& eval, std::span<const double> dl_dz,
                CostCriticGrads& grads, std::vector<double>* input_grad = nullptr) const;

  // Gradient of sum_t dl_dz[t] * Z(tau_t) w.r.t. (s ++ a) only, parameters
  // held fixed (the policy update path).
  std::vector<double> input_gradient(const CostCriticEval& eval,
                                     std::span<const double> dl_dz) const;

  // Upper-tail CVaR estimate from the learned quantile function. Stratified
  // mode uses the deterministic midpoint grid tau_k = 1 - eps + eps*(k-0.5)/n.
  double cvar(std::span<const double> s, std::span<const double> a, double epsilon,
              int n, CvarMode mode, Rng* rng = nullptr) const;

  CostCriticGrads zero_grads() const;
  std::size_t param_count() const;
  void sync_targets();
  void soft_update_targets(double tau_soft);
  bool all_finite() const;

  MlpParams trunk, trunk_target;               // (s ++ a) -> hidden, ReLU output
  std::vector<double> embed_w, embed_w_target;  // hidden x embed
  std::vector<double> embed_b, embed_b_target;  // hidden
  MlpParams head, head_target;                 // hidden -> hidden -> 1

 private:
  std::vector<double> forward_with(const MlpParams& trunk_net,
                                   std::span<const double> ew, std::span<const double> eb,
                                   const MlpParams& head_net, std::span<const double> s,
                                   std::span<const double> a,
                                   std::span<const double> taus) const;
  int state_dim_ = 0, action_dim_ = 0, hidden_dim_ = 0, embed_dim_ = 0;
};

// CVaR from an arbitrary quantile evaluator; the critic overload above
// delegates here. Exposed so exact synthetic quantile functions can be used.
double cvar_from_quantile_fn(const std::function<double(double)>& quantile_at,
                             double epsilon, int n, CvarMode mode, Rng* rng);

struct CostLossResult {
  double loss = 0.0;
  CostCriticGrads grads;
};

// Quantile-regression TD loss against the frozen target critic, averaged
// over the batch and over the n x n_target fraction pairs. Next actions are
// drawn from the current policy.
CostLossResult cost_critic_loss(const QuantileCostCritic& critic,
                                std::span<const Transition> batch,
                                const GaussianPolicy& policy, int n, int n_target,
                                double gamma_c, double kappa, Rng& rng);

// Deterministic variant for tests: fraction sets and next actions supplied.
CostLossResult cost_critic_loss_with_taus(const QuantileCostCritic& critic,
                                          std::span<const Transition> batch,
                                          std::span<const std::vector<double>> next_actions,
                                          std::span<const double> taus,
                                          std::span<const double> taus_target,
                                          double gamma_c, double kappa);

}  // namespace slsac
