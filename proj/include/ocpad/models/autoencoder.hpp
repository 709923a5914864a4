#pragma once

#include <algorithm>
#include <exception>
#include <cstdint>
#include <span>
#include <thread>
#include <vector>

#include "ocpad/losses.hpp"
#include "ocpad/models/architecture.hpp"
#include "ocpad/nn/network.hpp"

namespace ocpad::models {

struct TrainingMetadata {
  std::uint64_t seed = 0;
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;
  double best_val_loss = 0.0;
  double final_val_loss = 0.0;  ///< validation loss of the last epoch run

  friend bool operator==(const TrainingMetadata&, const TrainingMetadata&) = default;
};

/// An autoencoder: architecture, trained parameters and the reconstruction
/// error used both for training and scoring. Immutable once trained, so
/// concurrent scoring calls are safe.
class AEModel {
 public:
  AEModel() = default;
  AEModel(AEArchitecture arch, losses::LossConfig loss, std::uint64_t seed)
      : arch_(arch), built_(build_architecture(arch)), net_(built_.layers, arch.input_shape()), loss_(loss) {
    loss_.validate();
    params_ = nn::init_params<float>(built_.layers, arch.input_shape(), seed);
    meta_.seed = seed;
  }

  const AEArchitecture& architecture() const { return arch_; }
  const nn::Network<float>& network() const { return net_; }
  std::size_t encoder_layers() const { return built_.encoder_layers; }
  const nn::ParamStore<float>& params() const { return params_; }
  nn::ParamStore<float>& mutable_params() { return params_; }
  const losses::LossConfig& loss() const { return loss_; }
  const TrainingMetadata& metadata() const { return meta_; }
  TrainingMetadata& mutable_metadata() { return meta_; }
  std::size_t latent_width() const { return models::latent_width(arch_); }

 private:
  AEArchitecture arch_;
  BuiltArchitecture built_;
  nn::Network<float> net_;
  nn::ParamStore<float> params_;
  losses::LossConfig loss_;
  TrainingMetadata meta_;
};

namespace detail {

inline void check_unit_range(const nn::Tensor<float>& x) {
  for (float v : x.storage())
    if (!(v >= 0.0f && v <= 1.0f)) throw ContractError("model input values must lie in [0,1]");
}

}  // namespace detail

/// Reconstructs a batch [B, d, H, W].
inline nn::Tensor<float> reconstruct(const AEModel& m, const nn::Tensor<float>& x) {
  detail::check_unit_range(x);
  return m.network().predict(m.params(), x);
}

/// Anomaly score of a single image [1, d, H, W] under the model's loss.
inline double score(const AEModel& m, const nn::Tensor<float>& x) {
  if (x.rank() != 4 || x.dim(0) != 1) throw ContractError("score expects one image of shape [1,d,H,W]");
  return losses::sample_score(x, reconstruct(m, x), m.loss());
}

/// Encoder output of a single image [1, d, H, W], flattened.
inline std::vector<float> latent(const AEModel& m, const nn::Tensor<float>& x) {
  if (x.rank() != 4 || x.dim(0) != 1) throw ContractError("latent expects one image of shape [1,d,H,W]");
  detail::check_unit_range(x);
  auto t = m.network().forward(m.params(), x, m.encoder_layers());
  const auto& h = t.activations.back();
  return std::vector<float>(h.storage().begin(), h.storage().end());
}

/// Runs `fn(i)` for i in [0, n) on up to `jobs` threads. Each index is
/// handled by exactly one worker, so results are independent of `jobs`.
template <class Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn&& fn) {
  jobs = std::max<std::size_t>(1, std::min(jobs, n));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> workers;
  std::vector<std::exception_ptr> errors(jobs);
  for (std::size_t w = 0; w < jobs; ++w) {
    workers.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < n; i += jobs) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : workers) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Scores every image of a source (anything with size() and image(i) as a span).
template <class Source>
std::vector<double> score_all(const AEModel& m, const Source& src, std::size_t jobs = 1) {
  std::vector<double> out(src.size());
  const nn::Shape shape = nn::with_batch(1, m.architecture().input_shape());
  parallel_for(src.size(), jobs, [&](std::size_t i) {
    const auto img = src.image(i);
    nn::Tensor<float> x(shape, std::vector<float>(img.begin(), img.end()));
    out[i] = score(m, x);
  });
  return out;
}

template <class Source>
std::vector<std::vector<float>> latent_all(const AEModel& m, const Source& src, std::size_t jobs = 1) {
  std::vector<std::vector<float>> out(src.size());
  const nn::Shape shape = nn::with_batch(1, m.architecture().input_shape());
  parallel_for(src.size(), jobs, [&](std::size_t i) {
    const auto img = src.image(i);
    nn::Tensor<float> x(shape, std::vector<float>(img.begin(), img.end()));
    out[i] = latent(m, x);
  });
  return out;
}

}  // namespace ocpad::models
