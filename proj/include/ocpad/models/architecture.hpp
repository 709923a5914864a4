#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "ocpad/nn/network.hpp"

namespace ocpad::models {

using nn::LayerSpec;

enum class ArchKind { conv_ae, pooling_ae, dense_ae };

inline std::string_view to_string(ArchKind k) {
  switch (k) {
    case ArchKind::conv_ae: return "conv_ae";
    case ArchKind::pooling_ae: return "pooling_ae";
    case ArchKind::dense_ae: return "dense_ae";
  }
  return "?";
}

inline ArchKind parse_arch_kind(std::string_view s) {
  if (s == "conv" || s == "conv_ae") return ArchKind::conv_ae;
  if (s == "pooling" || s == "pooling_ae") return ArchKind::pooling_ae;
  if (s == "dense" || s == "dense_ae") return ArchKind::dense_ae;
  throw UsageError("unknown architecture '" + std::string(s) + "' (expected conv, pooling or dense)");
}

struct AEArchitecture {
  ArchKind kind = ArchKind::dense_ae;
  std::size_t channels = 4;  ///< 4 for SWIR stacks, 3 for laser frame triples
  std::size_t height = 32;
  std::size_t width = 96;
  std::size_t filters = 12;
  std::size_t latent = 64;  ///< dense_ae bottleneck width

  nn::Shape input_shape() const { return {channels, height, width}; }
  std::size_t input_size() const { return channels * height * width; }

  friend bool operator==(const AEArchitecture&, const AEArchitecture&) = default;
};

/// Width of the encoder output: the bottleneck for dense_ae, the flattened
/// feature maps otherwise.
inline std::size_t latent_width(const AEArchitecture& a) {
  if (a.kind == ArchKind::dense_ae) return a.latent;
  return a.filters * nn::ceil_div(a.height, 2) * nn::ceil_div(a.width, 2);
}

/// Layer chain plus the number of leading layers that form the encoder.
struct BuiltArchitecture {
  std::vector<LayerSpec> layers;
  std::size_t encoder_layers = 0;
};

/// Single-stage encoders with a mirrored decoder:
///   conv_ae:    Conv(f, s2) relu | Upsample2 | Conv(d) sigmoid
///   pooling_ae: Conv(f) relu, MaxPool2 | Upsample2 | Conv(d) sigmoid
///   dense_ae:   Conv(f) relu, MaxPool2, Flatten, Dense(latent) relu |
///               Dense(f*h*w) relu, Reshape, Upsample2 | Conv(d) sigmoid
/// A crop is inserted before the output conv when ceil rounding overshoots.
inline BuiltArchitecture build_architecture(const AEArchitecture& a) {
  if (a.channels < 1 || a.height < 1 || a.width < 1 || a.filters < 1)
    throw UsageError("architecture dimensions and filter count must be >= 1");
  const std::size_t h2 = nn::ceil_div(a.height, 2), w2 = nn::ceil_div(a.width, 2);
  BuiltArchitecture b;
  auto& L = b.layers;
  switch (a.kind) {
    case ArchKind::conv_ae:
      L = {LayerSpec::conv(a.filters, 3, 2), LayerSpec::relu()};
      b.encoder_layers = L.size();
      L.push_back(LayerSpec::upsample(2));
      break;
    case ArchKind::pooling_ae:
      L = {LayerSpec::conv(a.filters, 3, 1), LayerSpec::relu(), LayerSpec::maxpool(2)};
      b.encoder_layers = L.size();
      L.push_back(LayerSpec::upsample(2));
      break;
    case ArchKind::dense_ae:
      if (a.latent < 1) throw UsageError("dense_ae latent width must be >= 1");
      if (a.latent >= a.input_size())
        throw ContractError("undercompleteness violated: latent width " + std::to_string(a.latent) +
                            " must be smaller than input dimension " + std::to_string(a.input_size()));
      L = {LayerSpec::conv(a.filters, 3, 1), LayerSpec::relu(), LayerSpec::maxpool(2), LayerSpec::flatten(),
           LayerSpec::dense(a.latent), LayerSpec::relu()};
      b.encoder_layers = L.size();
      L.push_back(LayerSpec::dense(a.filters * h2 * w2));
      L.push_back(LayerSpec::relu());
      L.push_back(LayerSpec::reshape({a.filters, h2, w2}));
      L.push_back(LayerSpec::upsample(2));
      break;
  }
  const std::size_t code = latent_width(a);
  if (code >= a.input_size())
    throw ContractError("undercompleteness violated: " + std::string(to_string(a.kind)) + " code width " +
                        std::to_string(code) + " must be smaller than input dimension " +
                        std::to_string(a.input_size()));
  if (2 * h2 != a.height || 2 * w2 != a.width) L.push_back(LayerSpec::crop(a.height, a.width));
  L.push_back(LayerSpec::conv(a.channels, 3, 1));
  L.push_back(LayerSpec::sigmoid());
  nn::infer_shapes(L, a.input_shape());
  return b;
}

}  // namespace ocpad::models
