#pragma once

#include <memory>
#include <span>
#include <vector>

#include "slsac/rng.hpp"

namespace slsac {

// One environment step record.
struct Transition {
  std::vector<double> s;
  std::vector<double> a;
  double r = 0.0;
  double c = 0.0;  // cost, >= 0 in the built-in environments
  std::vector<double> s_next;
  bool d = false;
};

struct StepResult {
  std::vector<double> s_next;
  double r = 0.0;
  double c = 0.0;
  bool d = false;
};

class Env {
 public:
  virtual ~Env() = default;
  virtual int state_dim() const = 0;
  virtual int action_dim() const = 0;
  virtual int horizon() const = 0;
  virtual std::vector<double> reset(Rng& rng) = 0;
  virtual StepResult step(std::span<const double> action) = 0;
  virtual std::unique_ptr<Env> clone() const = 0;
};

// 1-D velocity-limit task: accelerate for reward, pay unit cost above the
// speed limit. state = (x, v); v' = clamp(v + 0.1 a, -3, 3); x' = x + 0.05 v';
// r = v'; c = 1{v' > v_limit}; episode ends at the horizon only.
class PointVelocityEnv : public Env {
 public:
  explicit PointVelocityEnv(double v_limit = 1.0, int horizon = 400,
                            double reset_noise = 0.05);

  int state_dim() const override { return 2; }
  int action_dim() const override { return 1; }
  int horizon() const override { return horizon_; }
  std::vector<double> reset(Rng& rng) override;
  StepResult step(std::span<const double> action) override;
  std::unique_ptr<Env> clone() const override;

 private:
  double v_limit_;
  int horizon_;
  double reset_noise_;
  double x_ = 0.0, v_ = 0.0;
  int t_ = 0;
};

enum class HazardCostMode { Indicator, Depth };

// 2-D navigation with fixed circular hazards. state seen by the agent is
// (p, g); hazards are placed once from `placement_seed` and stay fixed.
class HazardNavEnv : public Env {
 public:
  HazardNavEnv(int n_hazards, std::uint64_t placement_seed, int horizon = 500,
               HazardCostMode cost_mode = HazardCostMode::Indicator);

  int state_dim() const override { return 4; }
  int action_dim() const override { return 2; }
  int horizon() const override { return horizon_; }
  std::vector<double> reset(Rng& rng) override;
  StepResult step(std::span<const double> action) override;
  std::unique_ptr<Env> clone() const override;

  struct Hazard {
    double cx, cy, radius;
  };
  const std::vector<Hazard>& hazards() const { return hazards_; }
  bool inside_hazard(double x, double y) const;

 private:
  void sample_goal(Rng& rng);
  std::vector<double> observation() const;

  std::vector<Hazard> hazards_;
  int horizon_;
  HazardCostMode cost_mode_;
  double px_ = 0.0, py_ = 0.0, gx_ = 0.0, gy_ = 0.0;
  int t_ = 0;
  Rng goal_rng_;  // goal resampling stream, reseeded at reset

  static constexpr double kArena = 2.0;
  static constexpr double kGoalRadius = 0.15;
  static constexpr double kGoalBonus = 5.0;
};

// Ring storage of transitions with uniform minibatch sampling (distinct
// indices within a minibatch).
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(Transition t);
  std::size_t size() const { return full_ ? store_.size() : cursor_; }
  std::size_t capacity() const { return store_.size(); }
  std::vector<Transition> sample(std::size_t batch, Rng& rng) const;

 private:
  std::vector<Transition> store_;
  std::size_t cursor_ = 0;
  bool full_ = false;
};

}  // namespace slsac
