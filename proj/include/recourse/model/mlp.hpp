#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "recourse/common/random.hpp"
#include "recourse/common/serialization.hpp"

namespace recourse::model {

enum class Activation { kIdentity, kRelu, kTanh };

// Fully connected network with all parameters stored in one flat vector
// (per layer: row-major out x in weights, then biases). Optimizers, finite
// differences and serialization all work on the flat view.
class Mlp {
 public:
  struct Layer {
    std::size_t in;
    std::size_t out;
    Activation activation;
    std::size_t weight_offset;
    std::size_t bias_offset;
  };

  // Post-activation outputs of every layer; values[0] is the input.
  struct Cache {
    std::vector<std::vector<double>> values;
    std::span<const double> output() const { return values.back(); }
  };

  Mlp() = default;
  // `sizes` = {input, hidden..., output}; one activation per layer.
  Mlp(const std::vector<std::size_t>& sizes, const std::vector<Activation>& activations);

  // Glorot-uniform for tanh/identity layers, He-normal for ReLU layers,
  // zero biases. The last layer's weights are multiplied by `output_scale`.
  void initialize(Rng& rng, double output_scale = 1.0);

  std::size_t input_dim() const { return layers_.empty() ? 0 : layers_.front().in; }
  std::size_t output_dim() const { return layers_.empty() ? 0 : layers_.back().out; }
  std::size_t num_params() const { return params_.size(); }
  const std::vector<Layer>& layers() const { return layers_; }

  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::vector<double> forward(std::span<const double> input) const;
  void forward(std::span<const double> input, Cache& cache) const;

  // Accumulates dLoss/dparams into `grad_params` given dLoss/doutput for the
  // pass recorded in `cache`.
  void backward(const Cache& cache, std::span<const double> grad_output,
                std::span<double> grad_params) const;

  json to_json() const;
  static Mlp from_json(const json& node);

 private:
  std::vector<Layer> layers_;
  std::vector<double> params_;
};

std::string_view to_string(Activation activation);
Activation parse_activation(std::string_view text);

struct AdamOptions {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t num_params, AdamOptions options);

  void step(std::span<double> params, std::span<const double> grads);

 private:
  AdamOptions options_;
  std::vector<double> m_;
  std::vector<double> v_;
  long long t_ = 0;
};

// Scales `grads` in place so its L2 norm is at most `max_norm`; returns the
// norm before clipping.
double clip_grad_norm(std::span<double> grads, double max_norm);

}  // namespace recourse::model
