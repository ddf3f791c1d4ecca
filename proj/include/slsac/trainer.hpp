#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "slsac/config.hpp"
#include "slsac/constraint.hpp"
#include "slsac/env.hpp"
#include "slsac/policy.hpp"
#include "slsac/quantile_critic.hpp"
#include "slsac/reward_ensemble.hpp"

namespace slsac {

// Raised when a loss or parameter goes non-finite; the CLI maps this to its
// own exit status.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// One metrics line. `event` is "episode" (emitted at episode end) or
// "epoch" (periodic loss record); loss fields always carry the latest
// values.
struct MetricsRecord {
  long step = 0;
  std::string event;
  long episodes = 0;
  double episode_return = 0.0;
  double episode_cost = 0.0;
  double lambda = 0.0;
  double empirical_cvar = 0.0;  // over the episode-cost window
  double critic_cvar = 0.0;     // critic estimate averaged over a batch slice
  double loss_reward = 0.0;
  double loss_cost = 0.0;
  double loss_policy = 0.0;
  double alpha = 0.0;
  std::string to_json() const;  // canonical, byte-stable
};

class MetricsSink {
 public:
  virtual ~MetricsSink() = default;
  virtual void record(const MetricsRecord& r) = 0;
};

class MemorySink : public MetricsSink {
 public:
  void record(const MetricsRecord& r) override { records.push_back(r); }
  std::vector<MetricsRecord> records;
};

class JsonlSink : public MetricsSink {
 public:
  explicit JsonlSink(const std::string& path);
  ~JsonlSink() override;
  void record(const MetricsRecord& r) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

using TraceFn = std::function<void(long step, std::string_view event, double value)>;

struct EvalResult {
  double mean_return = 0.0;
  double mean_cost = 0.0;
  std::vector<double> returns, costs;
};

struct RunSummary {
  long steps = 0;
  long episodes = 0;
  double final_lambda = 0.0;
  double final_alpha = 0.0;
  double final_window_cvar = 0.0;
  std::vector<double> episode_costs;    // every completed training episode
  std::vector<double> episode_returns;
  EvalResult eval;
};

std::unique_ptr<Env> make_env(const TrainConfig& cfg);

// The full off-policy loop: per step, interact and store, update the reward
// ensemble and the cost critic, every second active step update the policy
// and soft-update all targets, and after the multiplier warmup update lambda
// from the empirical CVaR of the episode-cost window.
class Trainer {
 public:
  Trainer(TrainConfig cfg, std::uint64_t run_seed);

  RunSummary run(MetricsSink* sink = nullptr, const TraceFn* trace = nullptr);

  void save_checkpoint(const std::string& path) const;

  const TrainConfig& config() const { return cfg_; }
  const GaussianPolicy& policy() const { return policy_; }
  const RewardEnsemble& ensemble() const { return ensemble_; }
  const QuantileCostCritic& cost_critic() const { return cost_critic_; }
  const Multiplier& multiplier() const { return mult_; }
  const EpisodeCostWindow& window() const { return window_; }

 private:
  TrainConfig cfg_;
  std::uint64_t run_seed_;
  std::unique_ptr<Env> env_;
  GaussianPolicy policy_;
  RewardEnsemble ensemble_;
  QuantileCostCritic cost_critic_;
  OptimizerState cost_opt_;
  Rng cost_noise_;
  EpisodeCostWindow window_;
  Multiplier mult_;
  ReplayBuffer buffer_;
};

// Deterministic-policy rollouts; undiscounted return/cost sums.
EvalResult evaluate(const GaussianPolicy& policy, Env& env, int episodes,
                    std::uint64_t seed);
// Uniform-random-action rollouts (baseline for learning checks).
EvalResult evaluate_random(Env& env, int episodes, std::uint64_t seed);

// Loads a policy trunk saved by save_checkpoint.
GaussianPolicy load_policy(const std::string& checkpoint_path);

}  // namespace slsac
