#include "slsac/constraint.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "slsac/quantile_critic.hpp"

namespace slsac {

EpisodeCostWindow::EpisodeCostWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw std::invalid_argument("EpisodeCostWindow: capacity must be > 0");
}

void EpisodeCostWindow::record(double episode_total) {
  if (buffer_.size() == capacity_) buffer_.pop_front();
  buffer_.push_back(episode_total);
}

SignalMode parse_signal_mode(const std::string& name) {
  if (name == "cvar") return SignalMode::Cvar;
  if (name == "expected") return SignalMode::Expected;
  throw std::invalid_argument("unknown signal mode: " + name);
}

double violation_signal(const EpisodeCostWindow& window, double epsilon, double beta,
                        SignalMode mode) {
  if (window.empty()) throw std::invalid_argument("violation_signal: empty window");
  const auto costs = window.values();
  if (mode == SignalMode::Cvar) return empirical_cvar(costs, epsilon) - beta;
  const double mean =
      std::accumulate(costs.begin(), costs.end(), 0.0) / static_cast<double>(costs.size());
  return mean - beta;
}

void update_lambda(Multiplier& mult, const EpisodeCostWindow& window, double epsilon,
                   long step) {
  if (step <= mult.warmup_multiplier) return;
  if (window.empty()) {
    ++mult.skipped_empty_window;
    return;
  }
  const double signal = empirical_cvar(window.values(), epsilon) - mult.beta;
  mult.lambda = std::max(0.0, mult.lambda + mult.eta_lambda * signal);
}

double tightened_beta(double beta, double delta, double epsilon) {
  if (epsilon <= 0.0 || epsilon > 1.0)
    throw std::invalid_argument("tightened_beta: epsilon must be in (0, 1]");
  if (delta < 0.0) throw std::invalid_argument("tightened_beta: delta must be >= 0");
  const double margin = delta / std::sqrt(epsilon);
  if (beta <= margin)
    throw std::invalid_argument("tightened_beta: infeasible margin (beta <= delta/sqrt(eps))");
  return beta - margin;
}

}  // namespace slsac
