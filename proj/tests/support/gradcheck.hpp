#pragma once

// Central finite-difference oracle for layer chains and losses, in double
// precision. A coordinate is skipped when the perturbation changes any
// piecewise structure of the forward pass (relu sign pattern, pooling
// argmax, loss mask): the function is not differentiable across it.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "ocpad/core/rng.hpp"
#include "ocpad/losses.hpp"
#include "ocpad/nn/network.hpp"

namespace ocpad::gradcheck {

inline constexpr double kStep = 1e-4;
inline constexpr double kMaskMargin = 1e-3;  // minimum distance of any mask decision from its threshold
inline constexpr double kRelTol = 1e-4;
inline constexpr double kAbsFloor = 1e-6;

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), kAbsFloor});
}

struct GradCheckResult {
  std::size_t checked = 0;
  std::size_t skipped = 0;
  double worst = 0.0;

  bool ok() const { return checked > 0 && worst < kRelTol; }

  void merge(const GradCheckResult& o) {
    checked += o.checked;
    skipped += o.skipped;
    worst = std::max(worst, o.worst);
  }
};

using Signature = std::vector<std::int64_t>;

struct Evaluation {
  double value = 0.0;
  Signature signature;
};

/// Compares `analytic` with central differences of `f` around `theta`.
inline GradCheckResult finite_difference(const std::function<Evaluation(const std::vector<double>&)>& f,
                                         std::vector<double> theta, const std::vector<double>& analytic) {
  GradCheckResult r;
  const Signature base = f(theta).signature;
  for (std::size_t k = 0; k < theta.size(); ++k) {
    const double saved = theta[k];
    theta[k] = saved + kStep;
    const Evaluation up = f(theta);
    theta[k] = saved - kStep;
    const Evaluation down = f(theta);
    theta[k] = saved;
    if (up.signature != base || down.signature != base) {
      ++r.skipped;
      continue;
    }
    const double numeric = (up.value - down.value) / (2.0 * kStep);
    r.worst = std::max(r.worst, relative_error(analytic[k], numeric));
    ++r.checked;
  }
  return r;
}

inline Signature trace_signature(const nn::Network<double>& net, const nn::ForwardTrace<double>& t) {
  Signature s;
  for (std::size_t i = 0; i < net.size(); ++i) {
    const auto kind = net.layers()[i].kind;
    if (kind == nn::LayerKind::relu)
      for (double v : t.activations[i].storage()) s.push_back(v > 0.0);
    if (kind == nn::LayerKind::maxpool)
      for (auto a : t.argmax[i]) s.push_back(a);
  }
  return s;
}

inline nn::Tensor<double> random_tensor(const nn::Shape& shape, SplitMix64& rng, double lo = -1.0, double hi = 1.0) {
  nn::Tensor<double> t(shape);
  for (double& v : t.storage()) v = rng.uniform(lo, hi);
  return t;
}

/// Packs every input element and parameter into one vector: input first,
/// then weights and biases layer by layer.
struct Packing {
  std::vector<double*> slots;

  std::vector<double> values() const {
    std::vector<double> v;
    v.reserve(slots.size());
    for (double* p : slots) v.push_back(*p);
    return v;
  }

  void assign(const std::vector<double>& v) const {
    for (std::size_t k = 0; k < slots.size(); ++k) *slots[k] = v[k];
  }
};

inline Packing pack(nn::Tensor<double>& input, nn::ParamStore<double>& p) {
  Packing pk;
  for (double& v : input.storage()) pk.slots.push_back(&v);
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    for (double& v : p.weights[i].storage()) pk.slots.push_back(&v);
    for (double& v : p.biases[i].storage()) pk.slots.push_back(&v);
  }
  return pk;
}

inline std::vector<double> pack_gradients(const nn::Gradients<double>& g, const nn::ParamStore<double>& p) {
  std::vector<double> v(g.input.storage().begin(), g.input.storage().end());
  for (std::size_t i = 0; i < p.weights.size(); ++i) {
    if (p.weights[i].empty()) continue;
    v.insert(v.end(), g.weights[i].storage().begin(), g.weights[i].storage().end());
    v.insert(v.end(), g.biases[i].storage().begin(), g.biases[i].storage().end());
  }
  return v;
}

/// Gradient of L = sum(r * net(x)) with respect to x and every parameter.
inline GradCheckResult check_network(const std::vector<nn::LayerSpec>& layers, const nn::Shape& batched_input,
                                     std::uint64_t seed) {
  const nn::Shape sample(batched_input.begin() + 1, batched_input.end());
  nn::Network<double> net(layers, sample);
  auto params = nn::init_params<double>(layers, sample, seed);
  SplitMix64 rng(derive_seed(seed, "gradcheck"));
  for (auto& b : params.biases)
    for (double& v : b.storage()) v = rng.uniform(-0.5, 0.5);
  auto x = random_tensor(batched_input, rng);
  const auto r = random_tensor(nn::with_batch(batched_input[0], net.output_shape()), rng);

  const auto t = net.forward(params, x);
  const auto analytic = pack_gradients(net.backward(params, t, r), params);
  const Packing pk = pack(x, params);
  auto f = [&](const std::vector<double>& theta) {
    pk.assign(theta);
    const auto tr = net.forward(params, x);
    double v = 0.0;
    for (std::size_t k = 0; k < r.size(); ++k) v += r[k] * tr.output()[k];
    return Evaluation{v, trace_signature(net, tr)};
  };
  return finite_difference(f, pk.values(), analytic);
}

inline Signature loss_signature(const losses::LossEval& ev) { return Signature(ev.weights.begin(), ev.weights.end()); }

/// Distance of the nearest pixel error to its proposed_wmse threshold, or of
/// the nearest pair of per-sample mses for the quantile loss.
inline double mask_margin(const nn::Tensor<double>& x, const nn::Tensor<double>& xr, const losses::LossConfig& cfg) {
  const auto ev = losses::evaluate(x, xr, cfg);
  const std::size_t B = x.dim(0), N = x.size() / B;
  double margin = std::numeric_limits<double>::infinity();
  if (cfg.kind == losses::LossKind::proposed_wmse) {
    for (std::size_t j = 0; j < B; ++j) {
      std::vector<double> e(N);
      for (std::size_t k = 0; k < N; ++k) e[k] = (x[j * N + k] - xr[j * N + k]) * (x[j * N + k] - xr[j * N + k]);
      double mean = 0.0, ss = 0.0;
      for (double v : e) mean += v;
      mean /= static_cast<double>(N);
      for (double v : e) ss += (v - mean) * (v - mean);
      const double thr = mean + cfg.c * std::sqrt(ss / static_cast<double>(N));
      for (double v : e) margin = std::min(margin, std::abs(v - thr));
    }
  } else if (cfg.kind == losses::LossKind::ishii_wmse) {
    auto m = ev.sample_mse;
    std::sort(m.begin(), m.end());
    for (std::size_t j = 1; j < m.size(); ++j) margin = std::min(margin, m[j] - m[j - 1]);
  }
  return margin;
}

/// Gradient of a loss with respect to the reconstruction. Draws fresh
/// tensors until no mask decision lies within kMaskMargin of its threshold.
inline GradCheckResult check_loss(const losses::LossConfig& cfg, const nn::Shape& shape, std::uint64_t seed) {
  SplitMix64 rng(derive_seed(seed, "losscheck"));
  nn::Tensor<double> x, xr;
  for (int attempt = 0;; ++attempt) {
    x = random_tensor(shape, rng, 0.0, 1.0);
    xr = random_tensor(shape, rng, 0.0, 1.0);
    if (mask_margin(x, xr, cfg) >= kMaskMargin || attempt > 1000) break;
  }
  const auto analytic_t = losses::loss_backward(x, xr, cfg);
  const std::vector<double> analytic(analytic_t.storage().begin(), analytic_t.storage().end());
  auto f = [&](const std::vector<double>& theta) {
    nn::Tensor<double> y(shape, theta);
    const auto ev = losses::evaluate(x, y, cfg);
    return Evaluation{ev.value, loss_signature(ev)};
  };
  return finite_difference(f, std::vector<double>(xr.storage().begin(), xr.storage().end()), analytic);
}

/// Gradient of loss(x, net(x)) through a whole autoencoder.
inline GradCheckResult check_composite(const std::vector<nn::LayerSpec>& layers, const nn::Shape& batched_input,
                                       const losses::LossConfig& cfg, std::uint64_t seed) {
  const nn::Shape sample(batched_input.begin() + 1, batched_input.end());
  nn::Network<double> net(layers, sample);
  auto params = nn::init_params<double>(layers, sample, seed);
  SplitMix64 rng(derive_seed(seed, "composite"));
  for (auto& b : params.biases)
    for (double& v : b.storage()) v = rng.uniform(-0.2, 0.2);
  nn::Tensor<double> x;
  for (int attempt = 0;; ++attempt) {
    x = random_tensor(batched_input, rng, 0.0, 1.0);
    if (mask_margin(x, net.predict(params, x), cfg) >= kMaskMargin || attempt > 1000) break;
  }
  const nn::Tensor<double> target = x;  // the reconstruction target stays fixed
  const auto t = net.forward(params, x);
  const auto ev = losses::evaluate(target, t.output(), cfg);
  const auto analytic = pack_gradients(net.backward(params, t, losses::backward(target, t.output(), ev)), params);
  const Packing pk = pack(x, params);
  auto f = [&](const std::vector<double>& theta) {
    pk.assign(theta);
    const auto tr = net.forward(params, x);
    const auto e = losses::evaluate(target, tr.output(), cfg);
    Signature s = trace_signature(net, tr);
    const Signature m = loss_signature(e);
    s.insert(s.end(), m.begin(), m.end());
    return Evaluation{e.value, s};
  };
  return finite_difference(f, pk.values(), analytic);
}

}  // namespace ocpad::gradcheck
