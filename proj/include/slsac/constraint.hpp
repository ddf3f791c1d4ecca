#pragma once

#include <deque>
#include <span>
#include <string>
#include <vector>

namespace slsac {

// Bounded FIFO of recent undiscounted episode cost totals.
class EpisodeCostWindow {
 public:
  explicit EpisodeCostWindow(std::size_t capacity);

  void record(double episode_total);
  std::size_t size() const { return buffer_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return buffer_.empty(); }
  std::vector<double> values() const { return {buffer_.begin(), buffer_.end()}; }

 private:
  std::size_t capacity_;
  std::deque<double> buffer_;
};

enum class SignalMode { Cvar, Expected };

SignalMode parse_signal_mode(const std::string& name);

// Constraint-violation signal over the window: tail estimate minus the cost
// limit. Cvar mode uses the empirical CVaR, Expected mode the plain mean.
double violation_signal(const EpisodeCostWindow& window, double epsilon, double beta,
                        SignalMode mode);

// Lagrange multiplier with projected gradient ascent and warmup gating.
struct Multiplier {
  double lambda = 0.0;
  double eta_lambda = 0.01;
  double beta = 25.0;       // cost limit actually enforced (margin applied)
  long warmup_general = 5000;
  long warmup_multiplier = 100000;
  long skipped_empty_window = 0;  // diagnostic: active-phase no-ops
};

// lambda <- max(0, lambda + eta * (empirical CVaR - beta)), active only after
// warmup_multiplier steps; empty windows during the active phase are counted
// and skipped.
void update_lambda(Multiplier& mult, const EpisodeCostWindow& window, double epsilon,
                   long step);

// Corollary-style tightened limit beta' = beta - delta/sqrt(epsilon).
double tightened_beta(double beta, double delta, double epsilon);

}  // namespace slsac
