#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "ocpad/nn/tensor.hpp"

namespace ocpad {

enum class Label : std::uint8_t { bonafide = 0, attack = 1 };

inline std::string_view to_string(Label l) { return l == Label::bonafide ? "bonafide" : "attack"; }

inline Label parse_label(std::string_view s) {
  if (s == "bonafide") return Label::bonafide;
  if (s == "attack") return Label::attack;
  throw FormatError("unknown label '" + std::string(s) + "' (expected bonafide or attack)");
}

inline constexpr std::string_view kBonafideSpecies = "bonafide";

struct SampleInfo {
  std::string sample_id;
  std::string subject_id;
  Label label = Label::bonafide;
  std::string species{kBonafideSpecies};

  friend bool operator==(const SampleInfo&, const SampleInfo&) = default;
};

}  // namespace ocpad

namespace ocpad::dataset {

/// Labeled multi-channel images, stored sample-major then channel-major.
/// May be empty (an all-attack split has no bona fide part, and so on).
class SampleSet {
 public:
  SampleSet() = default;
  SampleSet(std::size_t channels, std::size_t height, std::size_t width)
      : channels_(channels), height_(height), width_(width) {}

  std::size_t size() const { return info_.size(); }
  bool empty() const { return info_.empty(); }
  std::size_t channels() const { return channels_; }
  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t image_size() const { return channels_ * height_ * width_; }
  nn::Shape image_shape() const { return {channels_, height_, width_}; }

  const SampleInfo& info(std::size_t i) const { return info_.at(i); }
  const std::vector<SampleInfo>& infos() const { return info_; }
  std::span<const float> pixels() const { return pixels_; }

  std::span<const float> image(std::size_t i) const {
    return std::span<const float>(pixels_).subspan(i * image_size(), image_size());
  }

  // Sample-source interface used by training.
  bool is_attack(std::size_t i) const { return info_.at(i).label == Label::attack; }
  void read_image(std::size_t i, std::span<float> out) const {
    const auto src = image(i);
    std::copy(src.begin(), src.end(), out.begin());
  }

  void add(SampleInfo info, std::span<const float> image) {
    if (image.size() != image_size())
      throw ContractError("sample '" + info.sample_id + "' has " + std::to_string(image.size()) +
                          " values, expected " + std::to_string(image_size()));
    pixels_.insert(pixels_.end(), image.begin(), image.end());
    info_.push_back(std::move(info));
  }

  /// Images [first, first+count) of `indices` as a [count, d, H, W] tensor.
  nn::Tensor<float> batch(std::span<const std::size_t> indices) const {
    std::vector<float> d;
    d.reserve(indices.size() * image_size());
    for (std::size_t i : indices) {
      const auto img = image(i);
      d.insert(d.end(), img.begin(), img.end());
    }
    return nn::Tensor<float>({indices.size(), channels_, height_, width_}, std::move(d));
  }

  nn::Tensor<float> batch_range(std::size_t first, std::size_t count) const {
    std::vector<std::size_t> idx(count);
    for (std::size_t k = 0; k < count; ++k) idx[k] = first + k;
    return batch(idx);
  }

  SampleSet subset(std::span<const std::size_t> indices) const {
    SampleSet s(channels_, height_, width_);
    for (std::size_t i : indices) s.add(info_.at(i), image(i));
    return s;
  }

  std::size_t count(Label l) const {
    return static_cast<std::size_t>(std::count_if(info_.begin(), info_.end(), [l](const SampleInfo& s) { return s.label == l; }));
  }

  /// Checks the set-level invariants; throws ContractError on the first violation.
  void validate() const {
    if (channels_ != 3 && channels_ != 4)
      throw ContractError("sample sets carry 3 or 4 channels, got " + std::to_string(channels_));
    if (height_ < 1 || width_ < 1) throw ContractError("sample images must be at least 1x1");
    std::unordered_set<std::string> ids;
    for (const auto& s : info_) {
      if (!ids.insert(s.sample_id).second) throw ContractError("duplicate sample id '" + s.sample_id + "'");
      if (s.label == Label::bonafide && s.species != kBonafideSpecies)
        throw ContractError("bona fide sample '" + s.sample_id + "' must carry species 'bonafide'");
    }
    for (float v : pixels_)
      if (!(v >= 0.0f && v <= 1.0f)) throw ContractError("pixel value outside [0,1]");
  }

  friend bool operator==(const SampleSet&, const SampleSet&) = default;

 private:
  std::size_t channels_ = 4;
  std::size_t height_ = 1;
  std::size_t width_ = 1;
  std::vector<SampleInfo> info_;
  std::vector<float> pixels_;
};

}  // namespace ocpad::dataset
