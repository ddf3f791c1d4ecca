#pragma once

#include <span>
#include <string>
#include <vector>

#include "slsac/env.hpp"
#include "slsac/mlp.hpp"
#include "slsac/optim.hpp"
#include "slsac/policy.hpp"
#include "slsac/rng.hpp"

namespace slsac {

// How the per-pair clipped values are combined across pairs.
enum class Aggregation { MeanMin, MinMin };

Aggregation parse_aggregation(const std::string& name);
std::string to_string(Aggregation a);

enum class EnsembleOptimizer { Langevin, AdamW };

// M twin-critic pairs (2M scalar Q networks over (s ++ a)) with target
// copies, one optimizer state and one noise stream per critic. Pair m owns
// critics 2m and 2m+1.
class RewardEnsemble {
 public:
  RewardEnsemble() = default;
  RewardEnsemble(int pairs, int state_dim, int action_dim, int hidden,
                 Aggregation aggregation, std::uint64_t run_seed, Rng& init);

  int pairs() const { return m_; }
  int size() const { return 2 * m_; }

  // Aggregated online value at (s, a); optionally the gradient w.r.t. the
  // action (through the argmin critics only).
  double value(std::span<const double> s, std::span<const double> a,
               std::vector<double>* action_grad = nullptr) const;
  // Same aggregation over the frozen target critics.
  double target_value(std::span<const double> s, std::span<const double> a) const;

  void sync_targets();
  void soft_update_targets(double tau_soft);
  bool all_finite() const;

  Aggregation aggregation = Aggregation::MeanMin;
  std::vector<MlpParams> critics, targets;  // size 2M
  std::vector<OptimizerState> opt;
  std::vector<Rng> noise;

 private:
  double aggregate(const std::vector<MlpParams>& nets, std::span<const double> s,
                   std::span<const double> a, std::vector<double>* action_grad) const;
  int m_ = 0;
};

// Bootstrap target per transition: r + gamma*(1-d)*(aggregate_target(s', a')
// - alpha*log_pi_target(a'|s')), with one shared a' ~ pi_target per
// transition.
std::vector<double> ensemble_target(const RewardEnsemble& ens,
                                    std::span<const Transition> batch,
                                    const GaussianPolicy& policy, double alpha,
                                    double gamma, Rng& rng);

struct CriticLoss {
  double loss = 0.0;
  MlpGrads grads;
};

// Per-critic mean squared Bellman error against a shared target vector.
std::vector<CriticLoss> ensemble_loss(const RewardEnsemble& ens,
                                      std::span<const Transition> batch,
                                      std::span<const double> targets);

struct EnsembleUpdateStats {
  double mean_loss = 0.0;
};

// One optimizer step for every critic against shared targets; Langevin
// critics draw from their own noise streams.
EnsembleUpdateStats ensemble_update(RewardEnsemble& ens,
                                    std::span<const Transition> batch,
                                    const GaussianPolicy& policy, double alpha,
                                    double gamma, LangevinVariant variant,
                                    EnsembleOptimizer optimizer, Rng& target_rng);

}  // namespace slsac
