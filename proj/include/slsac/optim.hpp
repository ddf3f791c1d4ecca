#pragma once

#include <span>
#include <string>
#include <vector>

#include "slsac/mlp.hpp"
#include "slsac/rng.hpp"

namespace slsac {

// The four Langevin update rules compared in the optimizer ablation.
enum class LangevinVariant { VanillaSgld, Psgld, FullAsgld, SlsacAsgld };

enum class ClipMode { Elementwise, GlobalNorm };

LangevinVariant parse_langevin_variant(const std::string& name);
std::string to_string(LangevinVariant v);

// Moment buffers plus every scalar the update rules need. One state per
// parameter set; never shared across networks.
struct OptimizerState {
  std::vector<double> m, v;
  long step_count = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps_num = 1e-8;
  double eta = 3e-4;        // learning rate
  double bias_factor = 0.1; // adaptive bias weight `a`
  double t_inv = 1e-8;      // inverse temperature
  double weight_decay = 0.0;
  double clip_c = 0.7;
  ClipMode clip_mode = ClipMode::Elementwise;

  static OptimizerState sized_for(std::size_t n);
  static OptimizerState sized_for(const MlpParams& p) { return sized_for(p.size()); }
};

// Decoupled-weight-decay adaptive step with bias-corrected moments.
// Rejects non-finite gradients without touching the state.
void adamw_step(std::span<double> params, std::span<const double> grads, OptimizerState& st);
void adamw_step(MlpParams& params, const MlpGrads& grads, OptimizerState& st);

// One Langevin step. All variants share the noise scale sqrt(2*eta*t_inv);
// FullAsgld additionally preconditions the noise elementwise. Drift for
// SlsacAsgld is clip(g + a * m / sqrt(v + eps)), clipped per clip_mode.
void langevin_step(std::span<double> params, std::span<const double> grads,
                   OptimizerState& st, LangevinVariant variant, Rng& rng);
void langevin_step(MlpParams& params, const MlpGrads& grads, OptimizerState& st,
                   LangevinVariant variant, Rng& rng);

// Elementwise clamp of the combined drift term to [-clip_c, clip_c].
std::vector<double> clip_combined(std::vector<double> drift, double clip_c);

}  // namespace slsac
