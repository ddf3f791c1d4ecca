#include "slsac/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace slsac {

void MlpGrads::zero() { flat.assign(flat.size(), 0.0); }

void MlpGrads::scale(double s) {
  for (double& g : flat) g *= s;
}

bool MlpGrads::all_finite() const {
  for (double g : flat)
    if (!std::isfinite(g)) return false;
  return true;
}

MlpParams::MlpParams(const std::vector<int>& dims, Activation hidden, Activation output) {
  if (dims.size() < 2) throw std::invalid_argument("mlp: need at least input and output dims");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    if (dims[l] <= 0 || dims[l + 1] <= 0)
      throw std::invalid_argument("mlp: layer dims must be positive");
    LayerSpec spec{dims[l], dims[l + 1],
                   (l + 2 == dims.size()) ? output : hidden};
    layers_.push_back(spec);
    w_off_.push_back(total);
    total += static_cast<std::size_t>(spec.out) * spec.in;
    b_off_.push_back(total);
    total += static_cast<std::size_t>(spec.out);
  }
  data_.assign(total, 0.0);
}

std::span<double> MlpParams::weight(std::size_t layer) {
  const auto& s = layers_.at(layer);
  return {data_.data() + w_off_[layer], static_cast<std::size_t>(s.out) * s.in};
}

std::span<const double> MlpParams::weight(std::size_t layer) const {
  const auto& s = layers_.at(layer);
  return {data_.data() + w_off_[layer], static_cast<std::size_t>(s.out) * s.in};
}

std::span<double> MlpParams::bias(std::size_t layer) {
  const auto& s = layers_.at(layer);
  return {data_.data() + b_off_[layer], static_cast<std::size_t>(s.out)};
}

std::span<const double> MlpParams::bias(std::size_t layer) const {
  const auto& s = layers_.at(layer);
  return {data_.data() + b_off_[layer], static_cast<std::size_t>(s.out)};
}

bool MlpParams::same_shape(const MlpParams& other) const {
  if (layers_.size() != other.layers_.size()) return false;
  for (std::size_t l = 0; l < layers_.size(); ++l)
    if (layers_[l].in != other.layers_[l].in || layers_[l].out != other.layers_[l].out)
      return false;
  return true;
}

bool MlpParams::all_finite() const {
  for (double x : data_)
    if (!std::isfinite(x)) return false;
  return true;
}

void init_uniform_fanin(MlpParams& p, Rng& rng) {
  for (std::size_t l = 0; l < p.layers().size(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(p.layers()[l].in));
    auto w = p.weight(l);
    for (double& x : w) x = rng.uniform(-bound, bound);
    auto b = p.bias(l);
    for (double& x : b) x = rng.uniform(-bound, bound);
  }
  p.flat_mut();  // bump version once more so the init is a visible mutation
}

namespace {

inline void apply_activation(Activation act, std::span<double> z) {
  if (act == Activation::Relu) {
    // subgradient at 0 is 0: z <= 0 gates to 0
    for (double& x : z) x = x > 0.0 ? x : 0.0;
  }
}

}  // namespace

std::vector<double> mlp_forward(const MlpParams& p, std::span<const double> input,
                                MlpTape* tape) {
  if (static_cast<int>(input.size()) != p.input_dim())
    throw std::invalid_argument("mlp_forward: input length does not match input_dim");
  if (tape) {
    tape->input.assign(input.begin(), input.end());
    tape->pre.clear();
    tape->params_version = p.version();
  }
  std::vector<double> cur(input.begin(), input.end());
  std::vector<double> nxt;
  for (std::size_t l = 0; l < p.layers().size(); ++l) {
    const auto& spec = p.layers()[l];
    const auto w = p.weight(l);
    const auto b = p.bias(l);
    nxt.resize(spec.out);
    for (int o = 0; o < spec.out; ++o) {
      const double* row = w.data() + static_cast<std::size_t>(o) * spec.in;
      double acc = b[o];
      for (int i = 0; i < spec.in; ++i) acc += row[i] * cur[i];
      nxt[o] = acc;
    }
    if (tape) tape->pre.push_back(nxt);
    apply_activation(spec.act, nxt);
    std::swap(cur, nxt);
  }
  return cur;
}

void mlp_backward_accumulate(const MlpParams& p, const MlpTape& tape,
                             std::span<const double> output_grad, MlpGrads& grads,
                             std::vector<double>* input_grad) {
  const auto& layers = p.layers();
  if (tape.params_version != p.version())
    throw std::invalid_argument("mlp_backward: stale tape (parameters changed since forward)");
  if (tape.pre.size() != layers.size() ||
      static_cast<int>(tape.input.size()) != p.input_dim())
    throw std::invalid_argument("mlp_backward: tape shape does not match parameters");
  if (static_cast<int>(output_grad.size()) != p.output_dim())
    throw std::invalid_argument("mlp_backward: output_grad length does not match output_dim");
  if (grads.flat.size() != p.size())
    throw std::invalid_argument("mlp_backward: gradient buffer size mismatch");

  const int n_layers = static_cast<int>(layers.size());
  std::vector<double> delta(output_grad.begin(), output_grad.end());
  if (layers.back().act == Activation::Relu) {
    const auto& z = tape.pre.back();
    for (std::size_t i = 0; i < delta.size(); ++i)
      if (z[i] <= 0.0) delta[i] = 0.0;
  }

  std::vector<double> prev_delta, act_prev;
  for (int l = n_layers - 1; l >= 0; --l) {
    const auto& spec = layers[l];
    // post-activation of the layer below (network input for l == 0)
    const double* below;
    if (l == 0) {
      below = tape.input.data();
    } else {
      const auto& z = tape.pre[l - 1];
      act_prev.resize(z.size());
      if (layers[l - 1].act == Activation::Relu) {
        for (std::size_t i = 0; i < z.size(); ++i) act_prev[i] = z[i] > 0.0 ? z[i] : 0.0;
      } else {
        act_prev.assign(z.begin(), z.end());
      }
      below = act_prev.data();
    }

    const auto w = p.weight(l);
    double* dw = grads.flat.data() +
                 (w.data() - p.flat().data());  // same layout as params
    double* db = dw + static_cast<std::size_t>(spec.out) * spec.in;
    const bool need_below_grad = (l > 0) || (input_grad != nullptr);
    if (need_below_grad) prev_delta.assign(spec.in, 0.0);
    for (int o = 0; o < spec.out; ++o) {
      const double d = delta[o];
      db[o] += d;
      const double* row = w.data() + static_cast<std::size_t>(o) * spec.in;
      double* drow = dw + static_cast<std::size_t>(o) * spec.in;
      if (d != 0.0) {
        for (int i = 0; i < spec.in; ++i) drow[i] += d * below[i];
        if (need_below_grad)
          for (int i = 0; i < spec.in; ++i) prev_delta[i] += d * row[i];
      }
    }
    if (l > 0) {
      const auto& z = tape.pre[l - 1];
      if (layers[l - 1].act == Activation::Relu)
        for (std::size_t i = 0; i < prev_delta.size(); ++i)
          if (z[i] <= 0.0) prev_delta[i] = 0.0;
      std::swap(delta, prev_delta);
    } else if (input_grad) {
      *input_grad = prev_delta;
    }
  }
}

std::vector<double> mlp_input_grad(const MlpParams& p, const MlpTape& tape,
                                   std::span<const double> output_grad) {
  const auto& layers = p.layers();
  if (tape.params_version != p.version())
    throw std::invalid_argument("mlp_input_grad: stale tape (parameters changed since forward)");
  if (static_cast<int>(output_grad.size()) != p.output_dim())
    throw std::invalid_argument("mlp_input_grad: output_grad length mismatch");

  std::vector<double> delta(output_grad.begin(), output_grad.end());
  if (layers.back().act == Activation::Relu) {
    const auto& z = tape.pre.back();
    for (std::size_t i = 0; i < delta.size(); ++i)
      if (z[i] <= 0.0) delta[i] = 0.0;
  }
  std::vector<double> prev_delta;
  for (int l = static_cast<int>(layers.size()) - 1; l >= 0; --l) {
    const auto& spec = layers[l];
    const auto w = p.weight(l);
    prev_delta.assign(spec.in, 0.0);
    for (int o = 0; o < spec.out; ++o) {
      const double d = delta[o];
      if (d == 0.0) continue;
      const double* row = w.data() + static_cast<std::size_t>(o) * spec.in;
      for (int i = 0; i < spec.in; ++i) prev_delta[i] += d * row[i];
    }
    if (l > 0) {
      const auto& z = tape.pre[l - 1];
      if (layers[l - 1].act == Activation::Relu)
        for (std::size_t i = 0; i < prev_delta.size(); ++i)
          if (z[i] <= 0.0) prev_delta[i] = 0.0;
    }
    std::swap(delta, prev_delta);
  }
  return delta;
}

MlpGrads mlp_backward(const MlpParams& p, const MlpTape& tape,
                      std::span<const double> output_grad,
                      std::vector<double>* input_grad) {
  MlpGrads grads;
  grads.flat.assign(p.size(), 0.0);
  mlp_backward_accumulate(p, tape, output_grad, grads, input_grad);
  return grads;
}

void soft_update(const MlpParams& online, MlpParams& target, double tau_soft) {
  if (!online.same_shape(target))
    throw std::invalid_argument("soft_update: parameter shapes differ");
  const auto src = online.flat();
  auto dst = target.flat_mut();
  for (std::size_t i = 0; i < dst.size(); ++i)
    dst[i] = (1.0 - tau_soft) * dst[i] + tau_soft * src[i];
}

}  // namespace slsac
