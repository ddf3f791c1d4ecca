#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "slsac/rng.hpp"

namespace slsac {

enum class Activation { Relu, Identity };

struct LayerSpec {
  int in = 0;
  int out = 0;
  Activation act = Activation::Identity;
};

// Gradient buffer, flat and layout-identical to the owning MlpParams.
struct MlpGrads {
  std::vector<double> flat;

  void zero();
  void scale(double s);
  bool all_finite() const;
};

// Activation record of one forward pass. Backward passes are only valid
// against the exact parameter state that produced the tape; any mutation of
// the parameters (optimizer step, soft update, load) invalidates it.
struct MlpTape {
  std::vector<double> input;
  std::vector<std::vector<double>> pre;  // pre-activation z per layer
  std::uint64_t params_version = 0;
};

// Feed-forward network parameters stored as one flat double buffer with
// per-layer weight/bias views. Weights are row-major [out x in].
class MlpParams {
 public:
  MlpParams() = default;
  // dims = {input, hidden..., output}
  MlpParams(const std::vector<int>& dims, Activation hidden = Activation::Relu,
            Activation output = Activation::Identity);

  int input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  int output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
  const std::vector<LayerSpec>& layers() const { return layers_; }
  std::size_t size() const { return data_.size(); }

  std::span<double> weight(std::size_t layer);
  std::span<const double> weight(std::size_t layer) const;
  std::span<double> bias(std::size_t layer);
  std::span<const double> bias(std::size_t layer) const;

  std::span<const double> flat() const { return data_; }
  // Mutable access; bumps the version so outstanding tapes are rejected.
  std::span<double> flat_mut() {
    ++version_;
    return data_;
  }

  std::uint64_t version() const { return version_; }
  bool same_shape(const MlpParams& other) const;
  bool all_finite() const;

 private:
  std::vector<LayerSpec> layers_;
  std::vector<std::size_t> w_off_, b_off_;
  std::vector<double> data_;
  std::uint64_t version_ = 0;
};

// U(-1/sqrt(fan_in), 1/sqrt(fan_in)) for weights and biases.
void init_uniform_fanin(MlpParams& p, Rng& rng);

std::vector<double> mlp_forward(const MlpParams& p, std::span<const double> input,
                                MlpTape* tape = nullptr);

// Gradient of dot(output, output_grad) w.r.t. every parameter; optionally
// also w.r.t. the input (needed for critics differentiated through actions).
MlpGrads mlp_backward(const MlpParams& p, const MlpTape& tape,
                      std::span<const double> output_grad,
                      std::vector<double>* input_grad = nullptr);

// Accumulating form used in batch loops; `grads.flat` must be pre-sized.
void mlp_backward_accumulate(const MlpParams& p, const MlpTape& tape,
                             std::span<const double> output_grad, MlpGrads& grads,
                             std::vector<double>* input_grad = nullptr);

// Gradient w.r.t. the input only (parameters treated as constants).
std::vector<double> mlp_input_grad(const MlpParams& p, const MlpTape& tape,
                                   std::span<const double> output_grad);

// target <- (1 - tau_soft) * target + tau_soft * online
void soft_update(const MlpParams& online, MlpParams& target, double tau_soft);

}  // namespace slsac
