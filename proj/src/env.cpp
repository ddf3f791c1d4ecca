#include "slsac/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_set>

namespace slsac {

namespace {
inline double clamp_unit(double a) { return std::clamp(a, -1.0, 1.0); }
}

PointVelocityEnv::PointVelocityEnv(double v_limit, int horizon, double reset_noise)
    : v_limit_(v_limit), horizon_(horizon), reset_noise_(reset_noise) {
  if (horizon <= 0) throw std::invalid_argument("PointVelocityEnv: horizon must be > 0");
}

std::vector<double> PointVelocityEnv::reset(Rng& rng) {
  x_ = 0.0;
  v_ = reset_noise_ > 0.0 ? rng.uniform(-reset_noise_, reset_noise_) : 0.0;
  t_ = 0;
  return {x_, v_};
}

StepResult PointVelocityEnv::step(std::span<const double> action) {
  const double a = clamp_unit(action.empty() ? 0.0 : action[0]);
  v_ = std::clamp(v_ + 0.1 * a, -3.0, 3.0);
  x_ += 0.05 * v_;
  ++t_;
  StepResult res;
  res.s_next = {x_, v_};
  res.r = v_;
  res.c = v_ > v_limit_ ? 1.0 : 0.0;
  res.d = t_ >= horizon_;
  return res;
}

std::unique_ptr<Env> PointVelocityEnv::clone() const {
  return std::make_unique<PointVelocityEnv>(*this);
}

HazardNavEnv::HazardNavEnv(int n_hazards, std::uint64_t placement_seed, int horizon,
                           HazardCostMode cost_mode)
    : horizon_(horizon), cost_mode_(cost_mode), goal_rng_(0) {
  if (horizon <= 0) throw std::invalid_argument("HazardNavEnv: horizon must be > 0");
  Rng place = Rng::substream(placement_seed, 0x4a5a);
  for (int k = 0; k < n_hazards; ++k) {
    Hazard h;
    h.cx = place.uniform(-kArena + 0.4, kArena - 0.4);
    h.cy = place.uniform(-kArena + 0.4, kArena - 0.4);
    h.radius = place.uniform(0.25, 0.45);
    hazards_.push_back(h);
  }
}

bool HazardNavEnv::inside_hazard(double x, double y) const {
  for (const auto& h : hazards_) {
    const double dx = x - h.cx, dy = y - h.cy;
    if (dx * dx + dy * dy < h.radius * h.radius) return true;
  }
  return false;
}

void HazardNavEnv::sample_goal(Rng& rng) {
  // rejection-sample a goal outside every hazard
  for (int tries = 0; tries < 1000; ++tries) {
    const double gx = rng.uniform(-kArena, kArena);
    const double gy = rng.uniform(-kArena, kArena);
    if (!inside_hazard(gx, gy)) {
      gx_ = gx;
      gy_ = gy;
      return;
    }
  }
  throw std::runtime_error("HazardNavEnv: could not place a goal outside hazards");
}

std::vector<double> HazardNavEnv::observation() const { return {px_, py_, gx_, gy_}; }

std::vector<double> HazardNavEnv::reset(Rng& rng) {
  for (int tries = 0; tries < 1000; ++tries) {
    px_ = rng.uniform(-kArena, kArena);
    py_ = rng.uniform(-kArena, kArena);
    if (!inside_hazard(px_, py_)) break;
    if (tries == 999)
      throw std::runtime_error("HazardNavEnv: could not place the agent outside hazards");
  }
  goal_rng_ = Rng(rng.next_u64());
  sample_goal(goal_rng_);
  t_ = 0;
  return observation();
}

StepResult HazardNavEnv::step(std::span<const double> action) {
  const double ax = clamp_unit(action.size() > 0 ? action[0] : 0.0);
  const double ay = clamp_unit(action.size() > 1 ? action[1] : 0.0);
  const double dist_before = std::hypot(px_ - gx_, py_ - gy_);
  px_ = std::clamp(px_ + 0.1 * ax, -kArena, kArena);
  py_ = std::clamp(py_ + 0.1 * ay, -kArena, kArena);
  ++t_;

  StepResult res;
  double dist_after = std::hypot(px_ - gx_, py_ - gy_);
  res.r = dist_before - dist_after;
  if (dist_after < kGoalRadius) {
    res.r += kGoalBonus;
    sample_goal(goal_rng_);
  }
  if (cost_mode_ == HazardCostMode::Indicator) {
    res.c = inside_hazard(px_, py_) ? 1.0 : 0.0;
  } else {
    double depth = 0.0;
    for (const auto& h : hazards_) {
      const double d = std::hypot(px_ - h.cx, py_ - h.cy);
      if (d < h.radius) depth = std::max(depth, (h.radius - d) / h.radius);
    }
    res.c = depth;
  }
  res.d = t_ >= horizon_;
  res.s_next = observation();
  return res;
}

std::unique_ptr<Env> HazardNavEnv::clone() const {
  return std::make_unique<HazardNavEnv>(*this);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) {
  if (capacity == 0) throw std::invalid_argument("ReplayBuffer: capacity must be > 0");
  store_.resize(capacity);
}

void ReplayBuffer::push(Transition t) {
  store_[cursor_] = std::move(t);
  ++cursor_;
  if (cursor_ == store_.size()) {
    cursor_ = 0;
    full_ = true;
  }
}

std::vector<Transition> ReplayBuffer::sample(std::size_t batch, Rng& rng) const {
  const std::size_t fill = size();
  if (batch == 0 || batch > fill)
    throw std::invalid_argument("ReplayBuffer: cannot sample " + std::to_string(batch) +
                                " transitions from " + std::to_string(fill));
  std::vector<Transition> out;
  out.reserve(batch);
  if (batch * 2 >= fill) {
    // dense draw: partial Fisher-Yates over all filled slots
    std::vector<std::size_t> idx(fill);
    for (std::size_t i = 0; i < fill; ++i) idx[i] = i;
    for (std::size_t i = 0; i < batch; ++i) {
      const std::size_t j = i + rng.uniform_index(fill - i);
      std::swap(idx[i], idx[j]);
      out.push_back(store_[idx[i]]);
    }
  } else {
    std::unordered_set<std::size_t> seen;
    while (out.size() < batch) {
      const std::size_t i = rng.uniform_index(fill);
      if (seen.insert(i).second) out.push_back(store_[i]);
    }
  }
  return out;
}

}  // namespace slsac
