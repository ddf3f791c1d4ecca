#include "slsac/optim.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace slsac {

LangevinVariant parse_langevin_variant(const std::string& name) {
  if (name == "vanilla_sgld") return LangevinVariant::VanillaSgld;
  if (name == "psgld") return LangevinVariant::Psgld;
  if (name == "full_asgld") return LangevinVariant::FullAsgld;
  if (name == "slsac_asgld") return LangevinVariant::SlsacAsgld;
  throw std::invalid_argument("unknown langevin variant: " + name);
}

std::string to_string(LangevinVariant v) {
  switch (v) {
    case LangevinVariant::VanillaSgld: return "vanilla_sgld";
    case LangevinVariant::Psgld: return "psgld";
    case LangevinVariant::FullAsgld: return "full_asgld";
    case LangevinVariant::SlsacAsgld: return "slsac_asgld";
  }
  throw std::invalid_argument("unknown langevin variant tag");
}

OptimizerState OptimizerState::sized_for(std::size_t n) {
  OptimizerState st;
  st.m.assign(n, 0.0);
  st.v.assign(n, 0.0);
  return st;
}

namespace {

void check_sizes(std::size_t params, std::size_t grads, const OptimizerState& st) {
  if (params != grads || st.m.size() != params || st.v.size() != params)
    throw std::invalid_argument("optimizer: parameter/gradient/state size mismatch");
}

bool all_finite(std::span<const double> xs) {
  for (double x : xs)
    if (!std::isfinite(x)) return false;
  return true;
}

}  // namespace

void adamw_step(std::span<double> params, std::span<const double> grads,
                OptimizerState& st) {
  check_sizes(params.size(), grads.size(), st);
  if (!all_finite(grads))
    throw std::runtime_error("adamw_step: non-finite gradient entries, step rejected");

  ++st.step_count;
  const double bc1 = 1.0 - std::pow(st.beta1, static_cast<double>(st.step_count));
  const double bc2 = 1.0 - std::pow(st.beta2, static_cast<double>(st.step_count));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * g;
    st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * g * g;
    const double m_hat = st.m[i] / bc1;
    const double v_hat = st.v[i] / bc2;
    params[i] -= st.eta * (m_hat / (std::sqrt(v_hat) + st.eps_num) +
                           st.weight_decay * params[i]);
  }
}

void adamw_step(MlpParams& params, const MlpGrads& grads, OptimizerState& st) {
  adamw_step(params.flat_mut(), grads.flat, st);
}

std::vector<double> clip_combined(std::vector<double> drift, double clip_c) {
  if (clip_c <= 0.0) throw std::invalid_argument("clip_combined: clip_c must be > 0");
  for (double& d : drift) d = std::clamp(d, -clip_c, clip_c);
  return drift;
}

void langevin_step(std::span<double> params, std::span<const double> grads,
                   OptimizerState& st, LangevinVariant variant, Rng& rng) {
  check_sizes(params.size(), grads.size(), st);
  if (st.t_inv < 0.0) throw std::invalid_argument("langevin_step: t_inv must be >= 0");
  if (!all_finite(grads))
    throw std::runtime_error("langevin_step: non-finite gradient entries, step rejected");

  ++st.step_count;
  const std::size_t n = params.size();
  const bool adaptive = variant != LangevinVariant::VanillaSgld;

  // effective gradient includes the Gaussian-prior pull toward zero
  auto eff_grad = [&](std::size_t i) {
    return grads[i] + st.weight_decay * params[i];
  };

  if (adaptive) {
    for (std::size_t i = 0; i < n; ++i) {
      const double g = eff_grad(i);
      st.m[i] = st.beta1 * st.m[i] + (1.0 - st.beta1) * g;
      st.v[i] = st.beta2 * st.v[i] + (1.0 - st.beta2) * g * g;
    }
  }

  std::vector<double> drift(n);
  switch (variant) {
    case LangevinVariant::VanillaSgld:
      for (std::size_t i = 0; i < n; ++i) drift[i] = eff_grad(i);
      break;
    case LangevinVariant::Psgld:
      for (std::size_t i = 0; i < n; ++i)
        drift[i] = eff_grad(i) / std::sqrt(st.v[i] + st.eps_num);
      break;
    case LangevinVariant::FullAsgld:
      for (std::size_t i = 0; i < n; ++i)
        drift[i] = st.m[i] / std::sqrt(st.v[i] + st.eps_num);
      break;
    case LangevinVariant::SlsacAsgld: {
      for (std::size_t i = 0; i < n; ++i)
        drift[i] = eff_grad(i) +
                   st.bias_factor * st.m[i] / std::sqrt(st.v[i] + st.eps_num);
      if (st.clip_mode == ClipMode::Elementwise) {
        for (double& d : drift) d = std::clamp(d, -st.clip_c, st.clip_c);
      } else {
        double norm_sq = 0.0;
        for (double d : drift) norm_sq += d * d;
        const double norm = std::sqrt(norm_sq);
        if (norm > st.clip_c)
          for (double& d : drift) d *= st.clip_c / norm;
      }
      break;
    }
  }

  for (std::size_t i = 0; i < n; ++i) params[i] -= st.eta * drift[i];

  if (st.t_inv > 0.0) {
    const double scale = std::sqrt(2.0 * st.eta * st.t_inv);
    if (variant == LangevinVariant::FullAsgld) {
      for (std::size_t i = 0; i < n; ++i)
        params[i] += scale * rng.normal() / std::pow(st.v[i] + st.eps_num, 0.25);
    } else {
      for (std::size_t i = 0; i < n; ++i) params[i] += scale * rng.normal();
    }
  }
}

void langevin_step(MlpParams& params, const MlpGrads& grads, OptimizerState& st,
                   LangevinVariant variant, Rng& rng) {
  langevin_step(params.flat_mut(), grads.flat, st, variant, rng);
}

}  // namespace slsac
