#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "ocpad/core/rng.hpp"
#include "ocpad/models/autoencoder.hpp"
#include "ocpad/nn/rmsprop.hpp"

namespace ocpad::models {

/// What training needs from a data set. Labels are inspected before any
/// image is read, so attack images never reach the optimizer.
template <class S>
concept SampleSource = requires(const S& s, std::size_t i, std::span<float> out) {
  { s.size() } -> std::convertible_to<std::size_t>;
  { s.is_attack(i) } -> std::convertible_to<bool>;
  { s.image_shape() } -> std::convertible_to<nn::Shape>;
  s.read_image(i, out);
};

struct TrainOptions {
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  nn::RmsPropOptions optimizer;
  std::uint64_t seed = 0;
};

struct EpochRecord {
  std::size_t epoch = 0;  ///< 0 is the untrained initialization
  double train_loss = 0.0;
  double val_loss = 0.0;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  AEModel model;                   ///< parameters of the best validation epoch
  std::vector<EpochRecord> trace;  ///< trace[0] is epoch 0
};

namespace detail {

template <SampleSource S>
void require_bonafide_only(const S& src, const char* which) {
  for (std::size_t i = 0; i < src.size(); ++i)
    if (src.is_attack(i))
      throw ContractError(std::string(which) + " set contains an attack sample at index " + std::to_string(i) +
                          "; one-class training accepts bona fide samples only");
}

template <SampleSource S>
nn::Tensor<float> gather(const S& src, std::span<const std::size_t> idx, const nn::Shape& image_shape) {
  const std::size_t n = nn::shape_size(image_shape);
  nn::Tensor<float> batch(nn::with_batch(idx.size(), image_shape));
  for (std::size_t k = 0; k < idx.size(); ++k) src.read_image(idx[k], batch.data().subspan(k * n, n));
  return batch;
}

/// Loss of `cfg` over a whole data set treated as one batch. Computed chunk by
/// chunk: mse and proposed_wmse are per-sample means, and ishii_wmse only
/// needs the per-sample mses to place its quantile.
template <SampleSource S>
double dataset_loss(const AEModel& m, const S& src, std::size_t chunk) {
  const auto& cfg = m.loss();
  const nn::Shape shape = m.architecture().input_shape();
  std::vector<double> mse, kept;
  mse.reserve(src.size());
  kept.reserve(src.size());
  std::vector<std::size_t> idx;
  for (std::size_t first = 0; first < src.size(); first += chunk) {
    const std::size_t count = std::min(chunk, src.size() - first);
    idx.resize(count);
    std::iota(idx.begin(), idx.end(), first);
    const auto x = gather(src, idx, shape);
    const auto xr = m.network().predict(m.params(), x);
    losses::LossConfig per_sample = cfg;
    if (cfg.kind == losses::LossKind::ishii_wmse) per_sample.kind = losses::LossKind::mse;
    const auto ev = losses::evaluate(x, xr, per_sample);
    mse.insert(mse.end(), ev.sample_mse.begin(), ev.sample_mse.end());
    kept.insert(kept.end(), ev.sample_loss.begin(), ev.sample_loss.end());
  }
  if (cfg.kind == losses::LossKind::ishii_wmse) {
    std::vector<double> sorted = mse;
    std::sort(sorted.begin(), sorted.end());
    const double cut = sorted[losses::nearest_rank(cfg.alpha, sorted.size()) - 1];
    for (std::size_t j = 0; j < mse.size(); ++j) kept[j] = mse[j] <= cut ? mse[j] : 0.0;
  }
  double total = 0.0;
  for (double v : kept) total += v;
  return total / static_cast<double>(kept.size());
}

}  // namespace detail

/// Validation loss of a model over a bona fide set.
template <SampleSource S>
double validation_loss(const AEModel& m, const S& val, std::size_t chunk = 32) {
  detail::require_bonafide_only(val, "validation");
  if (val.size() == 0) throw ContractError("validation set is empty");
  return detail::dataset_loss(m, val, chunk);
}

/// Bona fide-only training with seeded per-epoch shuffling and RMSprop. The
/// returned model carries the parameters of the epoch with the lowest
/// validation loss (epoch 0, the initialization, included).
template <SampleSource S, SampleSource V>
TrainResult train(const AEModel& initial, const S& train_set, const V& val_set, const TrainOptions& opt,
                  const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  detail::require_bonafide_only(train_set, "training");
  detail::require_bonafide_only(val_set, "validation");
  if (train_set.size() == 0) throw ContractError("training set is empty");
  if (val_set.size() == 0) throw ContractError("validation set is empty");
  const nn::Shape shape = initial.architecture().input_shape();
  if (nn::Shape(train_set.image_shape()) != shape || nn::Shape(val_set.image_shape()) != shape)
    throw ContractError("data image shape does not match the model input " + nn::shape_string(shape));
  if (opt.batch_size < 1) throw UsageError("batch size must be >= 1");
  opt.optimizer.validate();

  TrainResult result{initial, {}};
  AEModel current = initial;
  const auto& net = current.network();
  const losses::LossConfig cfg = current.loss();
  SplitMix64 rng(derive_seed(opt.seed, "shuffle"));

  double best = detail::dataset_loss(current, val_set, opt.batch_size);
  if (!std::isfinite(best)) throw NumericError("non-finite initial validation loss");
  result.trace.push_back({0, detail::dataset_loss(current, train_set, opt.batch_size), best});
  if (on_epoch) on_epoch(result.trace.back());
  std::size_t best_epoch = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  for (std::size_t epoch = 1; epoch <= opt.epochs; ++epoch) {
    shuffle(std::span<std::size_t>(order), rng);
    double sum = 0.0;
    std::size_t batches = 0;
    for (std::size_t first = 0; first < order.size(); first += opt.batch_size) {
      const std::size_t count = std::min(opt.batch_size, order.size() - first);
      const auto x = detail::gather(train_set, std::span<const std::size_t>(order).subspan(first, count), shape);
      const auto trace = net.forward(current.params(), x);
      const auto ev = losses::evaluate(x, trace.output(), cfg);
      if (!std::isfinite(ev.value))
        throw NumericError("non-finite training loss at epoch " + std::to_string(epoch));
      const auto grads = net.backward(current.params(), trace, losses::backward(x, trace.output(), ev), false);
      nn::rmsprop_step(current.mutable_params(), grads, opt.optimizer);
      sum += ev.value;
      ++batches;
    }
    const double val = detail::dataset_loss(current, val_set, opt.batch_size);
    if (!std::isfinite(val)) throw NumericError("non-finite validation loss at epoch " + std::to_string(epoch));
    result.trace.push_back({epoch, sum / static_cast<double>(batches), val});
    if (on_epoch) on_epoch(result.trace.back());
    if (val < best) {
      best = val;
      best_epoch = epoch;
      result.model = current;
    }
  }

  auto& meta = result.model.mutable_metadata();
  meta.seed = initial.metadata().seed;
  meta.epochs_run = opt.epochs;
  meta.best_epoch = best_epoch;
  meta.best_val_loss = best;
  meta.final_val_loss = result.trace.back().val_loss;
  return result;
}

}  // namespace ocpad::models
