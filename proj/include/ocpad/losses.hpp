#pragma once

// Reconstruction errors used both as training losses and as anomaly scores.
//
//   mse            plain mean squared error
//   ishii_wmse     per-sample weights: a sample is dropped when its mse exceeds
//                  the alpha-quantile of the batch mses
//   proposed_wmse  per-pixel weights: a squared error is dropped when it
//                  exceeds mse_j + C * std_j of its own sample
//
// All reductions run in double regardless of the tensor scalar type.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "ocpad/nn/tensor.hpp"

namespace ocpad::losses {

using nn::Tensor;

enum class LossKind { mse, ishii_wmse, proposed_wmse };

inline std::string_view to_string(LossKind k) {
  switch (k) {
    case LossKind::mse: return "mse";
    case LossKind::ishii_wmse: return "ishii_wmse";
    case LossKind::proposed_wmse: return "proposed_wmse";
  }
  return "?";
}

inline LossKind parse_loss_kind(std::string_view s) {
  if (s == "mse") return LossKind::mse;
  if (s == "ishii" || s == "ishii_wmse") return LossKind::ishii_wmse;
  if (s == "wmse" || s == "proposed_wmse") return LossKind::proposed_wmse;
  throw UsageError("unknown loss kind '" + std::string(s) + "' (expected mse, ishii or wmse)");
}

struct LossConfig {
  LossKind kind = LossKind::mse;
  double c = 1.8;      ///< threshold multiplier of proposed_wmse
  double alpha = 1.0;  ///< quantile level of ishii_wmse

  void validate() const {
    if (kind == LossKind::proposed_wmse && !(c >= 0.0 && std::isfinite(c)))
      throw UsageError("proposed_wmse requires C >= 0");
    if (kind == LossKind::ishii_wmse && !(alpha > 0.0 && alpha <= 1.0))
      throw UsageError("ishii_wmse requires 0 < alpha <= 1");
  }

  friend bool operator==(const LossConfig&, const LossConfig&) = default;
};

/// Loss value together with the 0/1 element weights that produced it.
struct LossEval {
  double value = 0.0;
  std::vector<double> sample_mse;      ///< per-sample unweighted mse
  std::vector<double> sample_loss;     ///< per-sample weighted mean error
  std::vector<std::uint8_t> weights;   ///< one entry per tensor element
};

namespace detail {

template <class T>
void check_pair(const Tensor<T>& x, const Tensor<T>& xr) {
  if (x.shape() != xr.shape())
    throw ContractError("loss: shape mismatch " + nn::shape_string(x.shape()) + " vs " + nn::shape_string(xr.shape()));
  if (x.rank() < 2) throw ContractError("loss: expected a batched tensor [B, ...]");
}

inline double squared_error(double a, double b) {
  const double d = a - b;
  return d * d;
}

}  // namespace detail

/// 1-based nearest-rank index ceil(alpha * n), guarded against representation error.
inline std::size_t nearest_rank(double alpha, std::size_t n) {
  const double r = std::ceil(alpha * static_cast<double>(n) - 1e-9);
  return std::clamp<std::size_t>(static_cast<std::size_t>(std::max(r, 1.0)), 1, n);
}

template <class T>
LossEval evaluate(const Tensor<T>& x, const Tensor<T>& xr, const LossConfig& cfg) {
  detail::check_pair(x, xr);
  cfg.validate();
  const std::size_t B = x.dim(0);
  const std::size_t N = x.size() / B;
  LossEval r;
  r.sample_mse.resize(B);
  r.sample_loss.resize(B);
  r.weights.assign(x.size(), 1);

  std::vector<double> e(N);
  for (std::size_t j = 0; j < B; ++j) {
    const std::size_t base = j * N;
    double sum = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      e[k] = detail::squared_error(static_cast<double>(x[base + k]), static_cast<double>(xr[base + k]));
      sum += e[k];
    }
    const double mse = sum / static_cast<double>(N);
    r.sample_mse[j] = mse;
    r.sample_loss[j] = mse;
    if (cfg.kind != LossKind::proposed_wmse) continue;

    const auto [lo, hi] = std::minmax_element(e.begin(), e.end());
    if (*lo == *hi) continue;  // constant error map: std is zero, every element sits at the mean
    double ss = 0.0;
    for (double v : e) ss += (v - mse) * (v - mse);
    const double stddev = std::sqrt(ss / static_cast<double>(N));
    const double threshold = mse + cfg.c * stddev;
    double kept = 0.0;
    for (std::size_t k = 0; k < N; ++k) {
      if (e[k] <= threshold) {
        kept += e[k];
      } else {
        r.weights[base + k] = 0;
      }
    }
    r.sample_loss[j] = kept / static_cast<double>(N);
  }

  if (cfg.kind == LossKind::ishii_wmse) {
    std::vector<double> sorted = r.sample_mse;
    std::sort(sorted.begin(), sorted.end());
    const double cut = sorted[nearest_rank(cfg.alpha, B) - 1];
    for (std::size_t j = 0; j < B; ++j) {
      if (r.sample_mse[j] <= cut) continue;
      r.sample_loss[j] = 0.0;
      std::fill_n(r.weights.begin() + static_cast<std::ptrdiff_t>(j * N), N, std::uint8_t{0});
    }
  }

  double total = 0.0;
  for (double v : r.sample_loss) total += v;
  r.value = total / static_cast<double>(B);
  return r;
}

template <class T>
double loss(const Tensor<T>& x, const Tensor<T>& xr, const LossConfig& cfg) {
  return evaluate(x, xr, cfg).value;
}

template <class T>
double mse_batch(const Tensor<T>& x, const Tensor<T>& xr) {
  return loss(x, xr, LossConfig{LossKind::mse});
}

template <class T>
double ishii_wmse_batch(const Tensor<T>& x, const Tensor<T>& xr, double alpha) {
  return loss(x, xr, LossConfig{LossKind::ishii_wmse, 0.0, alpha});
}

template <class T>
double proposed_wmse_batch(const Tensor<T>& x, const Tensor<T>& xr, double c) {
  return loss(x, xr, LossConfig{LossKind::proposed_wmse, c, 1.0});
}

/// dL/dx' given a forward evaluation: 2 (x' - x) / (B * N), times the element weights.
template <class T>
Tensor<T> backward(const Tensor<T>& x, const Tensor<T>& xr, const LossEval& eval) {
  detail::check_pair(x, xr);
  if (eval.weights.size() != x.size()) throw ContractError("loss backward: evaluation does not match tensors");
  const double scale = 2.0 / static_cast<double>(x.size());
  Tensor<T> g(x.shape());
  for (std::size_t k = 0; k < x.size(); ++k)
    if (eval.weights[k])
      g[k] = static_cast<T>(scale * (static_cast<double>(xr[k]) - static_cast<double>(x[k])));
  return g;
}

template <class T>
Tensor<T> loss_backward(const Tensor<T>& x, const Tensor<T>& xr, const LossConfig& cfg) {
  return backward(x, xr, evaluate(x, xr, cfg));
}

/// Anomaly score of one sample (batch of one); higher means more anomalous.
template <class T>
double sample_score(const Tensor<T>& x, const Tensor<T>& xr, const LossConfig& cfg) {
  detail::check_pair(x, xr);
  if (x.dim(0) != 1) throw ContractError("sample_score expects a single sample, got batch " + std::to_string(x.dim(0)));
  return evaluate(x, xr, cfg).value;
}

}  // namespace ocpad::losses
