#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ocpad/core/rng.hpp"
#include "ocpad/nn/layers.hpp"
#include "ocpad/nn/tensor.hpp"

namespace ocpad::nn {

enum class LayerKind { conv, maxpool, upsample, dense, flatten, reshape, relu, sigmoid, crop };

inline const char* to_string(LayerKind k) {
  switch (k) {
    case LayerKind::conv: return "conv";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::upsample: return "upsample";
    case LayerKind::dense: return "dense";
    case LayerKind::flatten: return "flatten";
    case LayerKind::reshape: return "reshape";
    case LayerKind::relu: return "relu";
    case LayerKind::sigmoid: return "sigmoid";
    case LayerKind::crop: return "crop";
  }
  return "?";
}

/// One layer of a sequential chain. Only the fields relevant to `kind` are read.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t out_channels = 0;  // conv
  std::size_t kernel = 3;        // conv
  std::size_t stride = 1;        // conv
  std::size_t factor = 2;        // maxpool, upsample
  std::size_t units = 0;         // dense
  Shape target;                  // reshape: per-sample shape; crop: {H, W}

  static LayerSpec conv(std::size_t out_channels, std::size_t kernel = 3, std::size_t stride = 1) {
    LayerSpec s;
    s.kind = LayerKind::conv;
    s.out_channels = out_channels;
    s.kernel = kernel;
    s.stride = stride;
    return s;
  }
  static LayerSpec maxpool(std::size_t factor = 2) {
    LayerSpec s;
    s.kind = LayerKind::maxpool;
    s.factor = factor;
    return s;
  }
  static LayerSpec upsample(std::size_t factor = 2) {
    LayerSpec s;
    s.kind = LayerKind::upsample;
    s.factor = factor;
    return s;
  }
  static LayerSpec dense(std::size_t units) {
    LayerSpec s;
    s.kind = LayerKind::dense;
    s.units = units;
    return s;
  }
  static LayerSpec flatten() {
    LayerSpec s;
    s.kind = LayerKind::flatten;
    return s;
  }
  static LayerSpec reshape(Shape per_sample) {
    LayerSpec s;
    s.kind = LayerKind::reshape;
    s.target = std::move(per_sample);
    return s;
  }
  static LayerSpec crop(std::size_t h, std::size_t w) {
    LayerSpec s;
    s.kind = LayerKind::crop;
    s.target = {h, w};
    return s;
  }
  static LayerSpec relu() { return LayerSpec{}; }
  static LayerSpec sigmoid() {
    LayerSpec s;
    s.kind = LayerKind::sigmoid;
    return s;
  }

  bool has_params() const { return kind == LayerKind::conv || kind == LayerKind::dense; }

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Per-sample output shape of every layer (index i holds the output of layer i).
/// Throws ContractError naming the first layer that does not type-check.
inline std::vector<Shape> infer_shapes(const std::vector<LayerSpec>& layers, const Shape& input) {
  std::vector<Shape> out;
  out.reserve(layers.size());
  Shape cur = input;
  auto fail = [](std::size_t i, const std::string& why) {
    throw ContractError("layer " + std::to_string(i) + ": " + why);
  };
  if (cur.empty()) throw ContractError("empty input shape");
  for (std::size_t d : cur)
    if (d == 0) throw ContractError("input dimensions must be >= 1");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    switch (l.kind) {
      case LayerKind::conv:
        if (cur.size() != 3) fail(i, "conv expects [C,H,W] input, got " + shape_string(cur));
        if (l.out_channels < 1) fail(i, "conv out-channels must be >= 1");
        if (l.stride != 1 && l.stride != 2) fail(i, "conv stride must be 1 or 2");
        if (l.kernel < 1 || l.kernel % 2 == 0) fail(i, "conv kernel must be odd and >= 1");
        cur = {l.out_channels, ceil_div(cur[1], l.stride), ceil_div(cur[2], l.stride)};
        break;
      case LayerKind::maxpool:
        if (cur.size() != 3) fail(i, "maxpool expects [C,H,W] input, got " + shape_string(cur));
        if (l.factor < 1) fail(i, "pool factor must be >= 1");
        cur = {cur[0], ceil_div(cur[1], l.factor), ceil_div(cur[2], l.factor)};
        break;
      case LayerKind::upsample:
        if (cur.size() != 3) fail(i, "upsample expects [C,H,W] input, got " + shape_string(cur));
        if (l.factor < 1) fail(i, "upsample factor must be >= 1");
        cur = {cur[0], cur[1] * l.factor, cur[2] * l.factor};
        break;
      case LayerKind::crop:
        if (cur.size() != 3 || l.target.size() != 2) fail(i, "crop expects [C,H,W] input and {H,W} target");
        if (l.target[0] < 1 || l.target[1] < 1 || l.target[0] > cur[1] || l.target[1] > cur[2])
          fail(i, "crop target " + shape_string(l.target) + " exceeds input " + shape_string(cur));
        cur = {cur[0], l.target[0], l.target[1]};
        break;
      case LayerKind::dense:
        if (cur.size() != 1) fail(i, "dense expects flat input, got " + shape_string(cur));
        if (l.units < 1) fail(i, "dense width must be >= 1");
        cur = {l.units};
        break;
      case LayerKind::flatten:
        cur = {shape_size(cur)};
        break;
      case LayerKind::reshape:
        if (l.target.empty() || shape_size(l.target) != shape_size(cur))
          fail(i, "reshape " + shape_string(cur) + " to " + shape_string(l.target) + " changes element count");
        for (std::size_t d : l.target)
          if (d == 0) fail(i, "reshape dimensions must be >= 1");
        cur = l.target;
        break;
      case LayerKind::relu:
      case LayerKind::sigmoid:
        break;
    }
    out.push_back(cur);
  }
  return out;
}

inline Shape with_batch(std::size_t batch, const Shape& per_sample) {
  Shape s{batch};
  s.insert(s.end(), per_sample.begin(), per_sample.end());
  return s;
}

/// Trainable state: weights and biases of every parametric layer plus the
/// matching RMSprop accumulators. Parameterless layers hold empty tensors.
template <class T>
struct ParamStore {
  std::vector<Tensor<T>> weights;
  std::vector<Tensor<T>> biases;
  std::vector<Tensor<T>> weight_acc;
  std::vector<Tensor<T>> bias_acc;
  std::uint64_t seed = 0;

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) n += weights[i].size() + biases[i].size();
    return n;
  }

  friend bool operator==(const ParamStore&, const ParamStore&) = default;
};

/// Glorot-uniform weights, zero biases, zero accumulators.
template <class T>
ParamStore<T> init_params(const std::vector<LayerSpec>& layers, const Shape& input, std::uint64_t seed) {
  const auto shapes = infer_shapes(layers, input);
  ParamStore<T> p;
  p.seed = seed;
  p.weights.resize(layers.size());
  p.biases.resize(layers.size());
  Shape cur = input;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    const LayerSpec& l = layers[i];
    if (l.has_params()) {
      Shape wshape;
      double fan_in = 0, fan_out = 0;
      std::size_t nb = 0;
      if (l.kind == LayerKind::conv) {
        wshape = {l.out_channels, cur[0], l.kernel, l.kernel};
        fan_in = static_cast<double>(cur[0] * l.kernel * l.kernel);
        fan_out = static_cast<double>(l.out_channels * l.kernel * l.kernel);
        nb = l.out_channels;
      } else {
        wshape = {cur[0], l.units};
        fan_in = static_cast<double>(cur[0]);
        fan_out = static_cast<double>(l.units);
        nb = l.units;
      }
      const double limit = std::sqrt(6.0 / (fan_in + fan_out));
      SplitMix64 rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
      Tensor<T> w(wshape);
      for (T& v : w.storage()) v = static_cast<T>(rng.uniform(-limit, limit));
      p.weights[i] = std::move(w);
      p.biases[i] = Tensor<T>({nb});
    }
    cur = shapes[i];
  }
  p.weight_acc.resize(layers.size());
  p.bias_acc.resize(layers.size());
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (!layers[i].has_params()) continue;
    p.weight_acc[i] = Tensor<T>(p.weights[i].shape());
    p.bias_acc[i] = Tensor<T>(p.biases[i].shape());
  }
  return p;
}

/// Intermediate values of one forward pass, kept for the backward pass.
/// activations[0] is the network input and activations[i + 1] the output of layer i.
template <class T>
struct ForwardTrace {
  std::vector<Tensor<T>> activations;
  std::vector<std::vector<std::uint32_t>> argmax;  // per layer; non-empty for maxpool only

  const Tensor<T>& output() const { return activations.back(); }
};

template <class T>
struct Gradients {
  std::vector<Tensor<T>> weights;
  std::vector<Tensor<T>> biases;
  Tensor<T> input;
};

/// A fixed sequential chain of layers over per-sample input shape [C,H,W].
template <class T>
class Network {
 public:
  Network() = default;
  Network(std::vector<LayerSpec> layers, Shape input_shape)
      : layers_(std::move(layers)), input_shape_(std::move(input_shape)), shapes_(infer_shapes(layers_, input_shape_)) {}

  const std::vector<LayerSpec>& layers() const { return layers_; }
  const Shape& input_shape() const { return input_shape_; }
  const Shape& output_shape() const { return shapes_.empty() ? input_shape_ : shapes_.back(); }
  /// Per-sample output shape of layer i.
  const Shape& layer_shape(std::size_t i) const { return shapes_.at(i); }
  std::size_t size() const { return layers_.size(); }

  /// Runs layers [0, last) and records everything the backward pass needs.
  ForwardTrace<T> forward(const ParamStore<T>& p, const Tensor<T>& input, std::size_t last = SIZE_MAX) const {
    check_input(input);
    last = std::min(last, layers_.size());
    ForwardTrace<T> t;
    t.activations.reserve(last + 1);
    t.argmax.resize(last);
    t.activations.push_back(input);
    const std::size_t B = input.dim(0);
    for (std::size_t i = 0; i < last; ++i) {
      const LayerSpec& l = layers_[i];
      const Tensor<T>& x = t.activations.back();
      Tensor<T> y;
      switch (l.kind) {
        case LayerKind::conv: y = conv2d_forward(x, p.weights[i], p.biases[i], l.stride); break;
        case LayerKind::maxpool: {
          auto r = maxpool_forward(x, l.factor);
          y = std::move(r.output);
          t.argmax[i] = std::move(r.argmax);
          break;
        }
        case LayerKind::upsample: y = upsample_forward(x, l.factor); break;
        case LayerKind::crop: y = crop_forward(x, l.target[0], l.target[1]); break;
        case LayerKind::dense: y = dense_forward(x, p.weights[i], p.biases[i]); break;
        case LayerKind::flatten:
        case LayerKind::reshape: y = x.reshaped(with_batch(B, shapes_[i])); break;
        case LayerKind::relu: y = relu_forward(x); break;
        case LayerKind::sigmoid: y = sigmoid_forward(x); break;
      }
      t.activations.push_back(std::move(y));
    }
    return t;
  }

  Tensor<T> predict(const ParamStore<T>& p, const Tensor<T>& input) const {
    auto t = forward(p, input);
    return std::move(t.activations.back());
  }

  /// Reverse pass over a full forward trace given dLoss/dOutput.
  /// With input_grad=false the gradient w.r.t. the network input is skipped
  /// and Gradients::input is left empty.
  Gradients<T> backward(const ParamStore<T>& p, const ForwardTrace<T>& t, Tensor<T> grad, bool input_grad = true) const {
    if (t.activations.size() != layers_.size() + 1) throw ContractError("backward needs a full forward trace");
    Gradients<T> g;
    g.weights.resize(layers_.size());
    g.biases.resize(layers_.size());
    for (std::size_t i = layers_.size(); i-- > 0;) {
      const LayerSpec& l = layers_[i];
      const Tensor<T>& x = t.activations[i];
      const bool need = input_grad || i > 0;
      switch (l.kind) {
        case LayerKind::conv: {
          auto cg = conv2d_backward(x, p.weights[i], grad, l.stride, need);
          g.weights[i] = std::move(cg.weight);
          g.biases[i] = std::move(cg.bias);
          grad = std::move(cg.input);
          break;
        }
        case LayerKind::maxpool: grad = maxpool_backward(x.shape(), t.argmax[i], grad); break;
        case LayerKind::upsample: grad = upsample_backward(grad, l.factor); break;
        case LayerKind::crop: grad = crop_backward(x.shape(), grad); break;
        case LayerKind::dense: {
          auto dg = dense_backward(x, p.weights[i], grad, need);
          g.weights[i] = std::move(dg.weight);
          g.biases[i] = std::move(dg.bias);
          grad = std::move(dg.input);
          break;
        }
        case LayerKind::flatten:
        case LayerKind::reshape: grad = grad.reshaped(x.shape()); break;
        case LayerKind::relu: grad = relu_backward(x, grad); break;
        case LayerKind::sigmoid: grad = sigmoid_backward(t.activations[i + 1], grad); break;
      }
    }
    g.input = std::move(grad);
    return g;
  }

 private:
  void check_input(const Tensor<T>& input) const {
    if (input.rank() != input_shape_.size() + 1)
      throw ContractError("input rank mismatch: expected batch x " + shape_string(input_shape_) + ", got " +
                          shape_string(input.shape()));
    for (std::size_t k = 0; k < input_shape_.size(); ++k)
      if (input.dim(k + 1) != input_shape_[k])
        throw ContractError("input shape mismatch: expected batch x " + shape_string(input_shape_) + ", got " +
                            shape_string(input.shape()));
  }

  std::vector<LayerSpec> layers_;
  Shape input_shape_;
  std::vector<Shape> shapes_;
};

}  // namespace ocpad::nn
