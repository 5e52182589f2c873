#include "recourse/model/mlp.hpp"

#include <cmath>

#include "recourse/common/error.hpp"

namespace recourse::model {
namespace {

inline double activate(Activation a, double z) {
  switch (a) {
    case Activation::kRelu: return z > 0.0 ? z : 0.0;
    case Activation::kTanh: return std::tanh(z);
    case Activation::kIdentity: return z;
  }
  return z;
}

// Derivative expressed through the post-activation value.
inline double activate_grad(Activation a, double y) {
  switch (a) {
    case Activation::kRelu: return y > 0.0 ? 1.0 : 0.0;
    case Activation::kTanh: return 1.0 - y * y;
    case Activation::kIdentity: return 1.0;
  }
  return 1.0;
}

void dense_forward(const Mlp::Layer& layer, const double* params, const double* in, double* out) {
  const double* w = params + layer.weight_offset;
  const double* b = params + layer.bias_offset;
  for (std::size_t o = 0; o < layer.out; ++o) {
    double z = b[o];
    const double* row = w + o * layer.in;
    for (std::size_t i = 0; i < layer.in; ++i) z += row[i] * in[i];
    out[o] = activate(layer.activation, z);
  }
}

}  // namespace

std::string_view to_string(Activation activation) {
  switch (activation) {
    case Activation::kIdentity: return "identity";
    case Activation::kRelu: return "relu";
    case Activation::kTanh: return "tanh";
  }
  return "identity";
}

Activation parse_activation(std::string_view text) {
  if (text == "identity") return Activation::kIdentity;
  if (text == "relu") return Activation::kRelu;
  if (text == "tanh") return Activation::kTanh;
  throw Error(ErrorCode::kCorruptArtifact, "unknown activation '" + std::string(text) + "'");
}

Mlp::Mlp(const std::vector<std::size_t>& sizes, const std::vector<Activation>& activations) {
  if (sizes.size() < 2 || activations.size() != sizes.size() - 1) {
    throw Error(ErrorCode::kPreconditionViolated, "MLP needs one activation per layer");
  }
  std::size_t offset = 0;
  for (std::size_t l = 0; l + 1 < sizes.size(); ++l) {
    if (sizes[l] == 0 || sizes[l + 1] == 0) {
      throw Error(ErrorCode::kPreconditionViolated, "MLP layer with zero width");
    }
    Layer layer{sizes[l], sizes[l + 1], activations[l], offset, offset + sizes[l] * sizes[l + 1]};
    offset = layer.bias_offset + layer.out;
    layers_.push_back(layer);
  }
  params_.assign(offset, 0.0);
}

void Mlp::initialize(Rng& rng, double output_scale) {
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const auto& layer = layers_[l];
    const double scale = l + 1 == layers_.size() ? output_scale : 1.0;
    double* w = params_.data() + layer.weight_offset;
    const std::size_t n = layer.in * layer.out;
    if (layer.activation == Activation::kRelu) {
      const double sd = std::sqrt(2.0 / static_cast<double>(layer.in));
      for (std::size_t k = 0; k < n; ++k) w[k] = scale * sd * standard_normal(rng);
    } else {
      const double limit = std::sqrt(6.0 / static_cast<double>(layer.in + layer.out));
      for (std::size_t k = 0; k < n; ++k) w[k] = scale * limit * (2.0 * uniform01(rng) - 1.0);
    }
    std::fill_n(params_.data() + layer.bias_offset, layer.out, 0.0);
  }
}

std::vector<double> Mlp::forward(std::span<const double> input) const {
  if (input.size() != input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "MLP input has width " +
                                                   std::to_string(input.size()) + ", expected " +
                                                   std::to_string(input_dim()));
  }
  std::vector<double> current(input.begin(), input.end());
  std::vector<double> next;
  for (const auto& layer : layers_) {
    next.resize(layer.out);
    dense_forward(layer, params_.data(), current.data(), next.data());
    current.swap(next);
  }
  return current;
}

void Mlp::forward(std::span<const double> input, Cache& cache) const {
  if (input.size() != input_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "MLP input width mismatch");
  }
  cache.values.resize(layers_.size() + 1);
  cache.values[0].assign(input.begin(), input.end());
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    cache.values[l + 1].resize(layers_[l].out);
    dense_forward(layers_[l], params_.data(), cache.values[l].data(), cache.values[l + 1].data());
  }
}

void Mlp::backward(const Cache& cache, std::span<const double> grad_output,
                   std::span<double> grad_params) const {
  if (grad_params.size() != params_.size() || grad_output.size() != output_dim()) {
    throw Error(ErrorCode::kDimensionMismatch, "MLP backward shape mismatch");
  }
  std::vector<double> upstream(grad_output.begin(), grad_output.end());
  std::vector<double> delta;
  for (std::size_t l = layers_.size(); l-- > 0;) {
    const auto& layer = layers_[l];
    const auto& out = cache.values[l + 1];
    const auto& in = cache.values[l];
    delta.resize(layer.out);
    for (std::size_t o = 0; o < layer.out; ++o) {
      delta[o] = upstream[o] * activate_grad(layer.activation, out[o]);
    }
    const double* w = params_.data() + layer.weight_offset;
    double* gw = grad_params.data() + layer.weight_offset;
    double* gb = grad_params.data() + layer.bias_offset;
    for (std::size_t o = 0; o < layer.out; ++o) {
      gb[o] += delta[o];
      double* grow = gw + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) grow[i] += delta[o] * in[i];
    }
    if (l == 0) break;
    upstream.assign(layer.in, 0.0);
    for (std::size_t o = 0; o < layer.out; ++o) {
      const double* row = w + o * layer.in;
      for (std::size_t i = 0; i < layer.in; ++i) upstream[i] += row[i] * delta[o];
    }
  }
}

json Mlp::to_json() const {
  json sizes = json::array();
  json activations = json::array();
  if (!layers_.empty()) sizes.push_back(layers_.front().in);
  for (const auto& layer : layers_) {
    sizes.push_back(layer.out);
    activations.push_back(to_string(layer.activation));
  }
  return {{"sizes", sizes}, {"activations", activations}, {"params", hex_array(params_)}};
}

Mlp Mlp::from_json(const json& node) {
  try {
    std::vector<std::size_t> sizes = node.at("sizes").get<std::vector<std::size_t>>();
    std::vector<Activation> activations;
    for (const auto& a : node.at("activations")) activations.push_back(parse_activation(a.get<std::string>()));
    Mlp net(sizes, activations);
    auto params = parse_hex_array(node.at("params"));
    if (params.size() != net.num_params()) {
      throw Error(ErrorCode::kCorruptArtifact, "parameter count does not match the architecture");
    }
    net.params_ = std::move(params);
    return net;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kCorruptArtifact, std::string("network: ") + e.what());
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kPreconditionViolated) {
      throw Error(ErrorCode::kCorruptArtifact, e.what());
    }
    throw;
  }
}

Adam::Adam(std::size_t num_params, AdamOptions options)
    : options_(options), m_(num_params, 0.0), v_(num_params, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(options_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(options_.beta2, static_cast<double>(t_));
  for (std::size_t k = 0; k < params.size(); ++k) {
    m_[k] = options_.beta1 * m_[k] + (1.0 - options_.beta1) * grads[k];
    v_[k] = options_.beta2 * v_[k] + (1.0 - options_.beta2) * grads[k] * grads[k];
    params[k] -= options_.lr * (m_[k] / c1) / (std::sqrt(v_[k] / c2) + options_.epsilon);
  }
}

double clip_grad_norm(std::span<double> grads, double max_norm) {
  double sq = 0.0;
  for (double g : grads) sq += g * g;
  const double norm = std::sqrt(sq);
  if (norm > max_norm && norm > 0.0) {
    const double factor = max_norm / norm;
    for (double& g : grads) g *= factor;
  }
  return norm;
}

}  // namespace recourse::model
