#pragma once

// Forward and backward kernels for the fixed layer zoo. Every kernel is a pure
// function of its arguments; backward kernels take the forward input (and the
// pooling argmax record) instead of hidden state.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ocpad/nn/tensor.hpp"

namespace ocpad::nn {

/// Leading padding for "same" convolution; the remainder goes to the trailing edge.
inline std::size_t same_pad_before(std::size_t in, std::size_t kernel, std::size_t stride) {
  const std::size_t out = (in + stride - 1) / stride;
  const std::ptrdiff_t total =
      std::max<std::ptrdiff_t>(static_cast<std::ptrdiff_t>((out - 1) * stride + kernel) - static_cast<std::ptrdiff_t>(in), 0);
  return static_cast<std::size_t>(total / 2);
}

inline std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

namespace detail {

// Output columns ox for which ix = ox*stride + kx - pad lies in [0, in_w).
inline void valid_range(std::size_t out_w, std::size_t in_w, std::size_t stride, std::ptrdiff_t offset,
                        std::size_t& first, std::size_t& last) {
  // need ox*stride + offset >= 0 and ox*stride + offset < in_w
  std::ptrdiff_t lo = 0;
  if (offset < 0) lo = (-offset + static_cast<std::ptrdiff_t>(stride) - 1) / static_cast<std::ptrdiff_t>(stride);
  std::ptrdiff_t hi_excl = (static_cast<std::ptrdiff_t>(in_w) - offset + static_cast<std::ptrdiff_t>(stride) - 1) /
                           static_cast<std::ptrdiff_t>(stride);
  hi_excl = std::clamp<std::ptrdiff_t>(hi_excl, 0, static_cast<std::ptrdiff_t>(out_w));
  lo = std::clamp<std::ptrdiff_t>(lo, 0, hi_excl);
  first = static_cast<std::size_t>(lo);
  last = static_cast<std::size_t>(hi_excl);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Convolution: cross-correlation with zero "same" padding.
// input [B,I,H,W], weight [O,I,K,K], bias [O] -> [B,O,ceil(H/s),ceil(W/s)]
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> conv2d_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias, std::size_t stride) {
  if (input.rank() != 4 || weight.rank() != 4 || weight.dim(1) != input.dim(1) || bias.size() != weight.dim(0))
    throw ContractError("conv2d: incompatible shapes input " + shape_string(input.shape()) + " weight " +
                        shape_string(weight.shape()));
  const std::size_t B = input.dim(0), I = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t O = weight.dim(0), K = weight.dim(2);
  const std::size_t Ho = ceil_div(H, stride), Wo = ceil_div(W, stride);
  const auto pt = static_cast<std::ptrdiff_t>(same_pad_before(H, K, stride));
  const auto pl = static_cast<std::ptrdiff_t>(same_pad_before(W, K, stride));

  Tensor<T> out({B, O, Ho, Wo});
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t o = 0; o < O; ++o) {
      T* plane = &out.at(b, o, 0, 0);
      std::fill(plane, plane + Ho * Wo, bias[o]);
      for (std::size_t i = 0; i < I; ++i) {
        const T* src = &input.at(b, i, 0, 0);
        for (std::size_t ky = 0; ky < K; ++ky) {
          for (std::size_t kx = 0; kx < K; ++kx) {
            const T w = weight.at(o, i, ky, kx);
            std::size_t x0, x1;
            detail::valid_range(Wo, W, stride, static_cast<std::ptrdiff_t>(kx) - pl, x0, x1);
            for (std::size_t oy = 0; oy < Ho; ++oy) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - pt;
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
              const T* row = src + static_cast<std::size_t>(iy) * W;
              T* dst = plane + oy * Wo;
              if (x0 >= x1) continue;
              // valid_range guarantees x0*stride + kx - pl >= 0
              const T* r = row + (x0 * stride + kx - static_cast<std::size_t>(pl));
              T* d = dst + x0;
              const std::size_t len = x1 - x0;
              if (stride == 1) {
                for (std::size_t k = 0; k < len; ++k) d[k] += w * r[k];
              } else {
                for (std::size_t k = 0; k < len; ++k) d[k] += w * r[k * stride];
              }
            }
          }
        }
      }
    }
  }
  return out;
}

template <class T>
struct ConvGrads {
  Tensor<T> input;
  Tensor<T> weight;
  Tensor<T> bias;
};

template <class T>
ConvGrads<T> conv2d_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& grad_out,
                             std::size_t stride, bool need_input = true) {
  const std::size_t B = input.dim(0), I = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t O = weight.dim(0), K = weight.dim(2);
  const std::size_t Ho = grad_out.dim(2), Wo = grad_out.dim(3);
  const auto pt = static_cast<std::ptrdiff_t>(same_pad_before(H, K, stride));
  const auto pl = static_cast<std::ptrdiff_t>(same_pad_before(W, K, stride));

  ConvGrads<T> g{need_input ? Tensor<T>(input.shape()) : Tensor<T>(), Tensor<T>(weight.shape()), Tensor<T>({O})};
  std::vector<T> lane(Wo);
  for (std::size_t o = 0; o < O; ++o) {
    double bsum = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
      const T* go = &grad_out.at(b, o, 0, 0);
      for (std::size_t k = 0; k < Ho * Wo; ++k) bsum += static_cast<double>(go[k]);
    }
    g.bias[o] = static_cast<T>(bsum);

    for (std::size_t i = 0; i < I; ++i) {
      for (std::size_t ky = 0; ky < K; ++ky) {
        for (std::size_t kx = 0; kx < K; ++kx) {
          const T w = weight.at(o, i, ky, kx);
          const std::ptrdiff_t shift = static_cast<std::ptrdiff_t>(kx) - pl;
          std::size_t x0, x1;
          detail::valid_range(Wo, W, stride, shift, x0, x1);
          // Per-column partial sums (at most B*Ho terms each), combined in double.
          std::fill(lane.begin(), lane.end(), T{});
          for (std::size_t b = 0; b < B; ++b) {
            const T* src = &input.at(b, i, 0, 0);
            T* gsrc = need_input ? &g.input.at(b, i, 0, 0) : nullptr;
            const T* go = &grad_out.at(b, o, 0, 0);
            for (std::size_t oy = 0; oy < Ho; ++oy) {
              const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(oy * stride + ky) - pt;
              if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
              const T* row = src + static_cast<std::size_t>(iy) * W;
              T* grow = need_input ? gsrc + static_cast<std::size_t>(iy) * W : nullptr;
              const T* gorow = go + oy * Wo;
              if (x0 >= x1) continue;
              const std::size_t first = x0 * stride + kx - static_cast<std::size_t>(pl);
              const T* r = row + first;
              T* gr = need_input ? grow + first : nullptr;
              const T* gw = gorow + x0;
              T* l = lane.data() + x0;
              const std::size_t len = x1 - x0;
              if (stride == 1) {
                for (std::size_t k = 0; k < len; ++k) l[k] += gw[k] * r[k];
                if (gr)
                  for (std::size_t k = 0; k < len; ++k) gr[k] += w * gw[k];
              } else {
                for (std::size_t k = 0; k < len; ++k) l[k] += gw[k] * r[k * stride];
                if (gr)
                  for (std::size_t k = 0; k < len; ++k) gr[k * stride] += w * gw[k];
              }
            }
          }
          double wsum = 0.0;
          for (T v : lane) wsum += static_cast<double>(v);
          g.weight.at(o, i, ky, kx) = static_cast<T>(wsum);
        }
      }
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Max pooling with factor f (window f x f, stride f, truncated edge windows).
// ---------------------------------------------------------------------------

template <class T>
struct PoolResult {
  Tensor<T> output;
  std::vector<std::uint32_t> argmax;  // flat input index per output element
};

template <class T>
PoolResult<T> maxpool_forward(const Tensor<T>& input, std::size_t factor = 2) {
  const std::size_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  const std::size_t Ho = ceil_div(H, factor), Wo = ceil_div(W, factor);
  PoolResult<T> r{Tensor<T>({B, C, Ho, Wo}), std::vector<std::uint32_t>(B * C * Ho * Wo)};
  std::size_t k = 0;
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c) {
      const std::size_t base = (b * C + c) * H * W;
      for (std::size_t oy = 0; oy < Ho; ++oy)
        for (std::size_t ox = 0; ox < Wo; ++ox, ++k) {
          std::size_t best = base + oy * factor * W + ox * factor;
          T best_v = input[best];
          for (std::size_t y = oy * factor; y < std::min(H, oy * factor + factor); ++y)
            for (std::size_t x = ox * factor; x < std::min(W, ox * factor + factor); ++x) {
              const std::size_t idx = base + y * W + x;
              if (input[idx] > best_v) {  // strict: ties keep the first index
                best_v = input[idx];
                best = idx;
              }
            }
          r.output[k] = best_v;
          r.argmax[k] = static_cast<std::uint32_t>(best);
        }
    }
  return r;
}

template <class T>
Tensor<T> maxpool_backward(const Shape& input_shape, const std::vector<std::uint32_t>& argmax, const Tensor<T>& grad_out) {
  Tensor<T> g(input_shape);
  for (std::size_t k = 0; k < grad_out.size(); ++k) g[argmax[k]] += grad_out[k];
  return g;
}

// ---------------------------------------------------------------------------
// Nearest-neighbour upsampling by factor f.
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> upsample_forward(const Tensor<T>& input, std::size_t factor = 2) {
  const std::size_t B = input.dim(0), C = input.dim(1), H = input.dim(2), W = input.dim(3);
  Tensor<T> out({B, C, H * factor, W * factor});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < H * factor; ++y) {
        const T* src = &input.at(b, c, y / factor, 0);
        T* dst = &out.at(b, c, y, 0);
        for (std::size_t x = 0; x < W * factor; ++x) dst[x] = src[x / factor];
      }
  return out;
}

template <class T>
Tensor<T> upsample_backward(const Tensor<T>& grad_out, std::size_t factor = 2) {
  const std::size_t B = grad_out.dim(0), C = grad_out.dim(1);
  const std::size_t H = grad_out.dim(2) / factor, W = grad_out.dim(3) / factor;
  Tensor<T> g({B, C, H, W});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < H * factor; ++y) {
        const T* src = &grad_out.at(b, c, y, 0);
        T* dst = &g.at(b, c, y / factor, 0);
        for (std::size_t x = 0; x < W * factor; ++x) dst[x / factor] += src[x];
      }
  return g;
}

// ---------------------------------------------------------------------------
// Top-left crop to [H, W]; used to undo ceil rounding for odd spatial sizes.
// ---------------------------------------------------------------------------

template <class T>
Tensor<T> crop_forward(const Tensor<T>& input, std::size_t H, std::size_t W) {
  const std::size_t B = input.dim(0), C = input.dim(1);
  Tensor<T> out({B, C, H, W});
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < H; ++y) std::copy_n(&input.at(b, c, y, 0), W, &out.at(b, c, y, 0));
  return out;
}

template <class T>
Tensor<T> crop_backward(const Shape& input_shape, const Tensor<T>& grad_out) {
  Tensor<T> g(input_shape);
  const std::size_t B = grad_out.dim(0), C = grad_out.dim(1), H = grad_out.dim(2), W = grad_out.dim(3);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t c = 0; c < C; ++c)
      for (std::size_t y = 0; y < H; ++y) std::copy_n(&grad_out.at(b, c, y, 0), W, &g.at(b, c, y, 0));
  return g;
}

// ---------------------------------------------------------------------------
// Dense: y = x W + b with x [B,N], W [N,M], b [M].
// ---------------------------------------------------------------------------

namespace detail {

inline constexpr std::size_t kFlushBlock = 512;

// Dot product with eight scalar-typed lanes, flushed into a double
// accumulator every kFlushBlock terms.
template <class T>
double dot(const T* a, const T* b, std::size_t n) {
  double total = 0.0;
  std::size_t k = 0;
  while (k < n) {
    const std::size_t end = std::min(n, k + kFlushBlock);
    T acc[8] = {};
    for (; k + 8 <= end; k += 8)
      for (std::size_t j = 0; j < 8; ++j) acc[j] += a[k + j] * b[k + j];
    for (; k < end; ++k) acc[0] += a[k] * b[k];
    double s = 0.0;
    for (T v : acc) s += static_cast<double>(v);
    total += s;
  }
  return total;
}

}  // namespace detail

template <class T>
Tensor<T> dense_forward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias) {
  if (input.rank() != 2 || weight.rank() != 2 || input.dim(1) != weight.dim(0) || bias.size() != weight.dim(1))
    throw ContractError("dense: width mismatch, input " + shape_string(input.shape()) + " weight " +
                        shape_string(weight.shape()));
  const std::size_t B = input.dim(0), N = weight.dim(0), M = weight.dim(1);
  Tensor<T> out({B, M});
  // Weight rows are the outer loop so each row is read once per batch.
  std::vector<double> acc(B * M);
  std::vector<T> part(B * M);
  for (std::size_t b = 0; b < B; ++b)
    for (std::size_t m = 0; m < M; ++m) acc[b * M + m] = static_cast<double>(bias[m]);
  for (std::size_t n0 = 0; n0 < N; n0 += detail::kFlushBlock) {
    std::fill(part.begin(), part.end(), T{});
    for (std::size_t n = n0; n < std::min(N, n0 + detail::kFlushBlock); ++n) {
      const T* wrow = &weight[n * M];
      for (std::size_t b = 0; b < B; ++b) {
        const T xv = input[b * N + n];
        if (xv == T{0}) continue;
        T* pp = part.data() + b * M;
        for (std::size_t m = 0; m < M; ++m) pp[m] += xv * wrow[m];
      }
    }
    for (std::size_t k = 0; k < B * M; ++k) acc[k] += static_cast<double>(part[k]);
  }
  for (std::size_t k = 0; k < B * M; ++k) out[k] = static_cast<T>(acc[k]);
  return out;
}

template <class T>
struct DenseGrads {
  Tensor<T> input;
  Tensor<T> weight;
  Tensor<T> bias;
};

template <class T>
DenseGrads<T> dense_backward(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& grad_out,
                             bool need_input = true) {
  const std::size_t B = input.dim(0), N = weight.dim(0), M = weight.dim(1);
  DenseGrads<T> g{need_input ? Tensor<T>(input.shape()) : Tensor<T>(), Tensor<T>(weight.shape()), Tensor<T>({M})};
  for (std::size_t m = 0; m < M; ++m) {
    double s = 0.0;
    for (std::size_t b = 0; b < B; ++b) s += static_cast<double>(grad_out[b * M + m]);
    g.bias[m] = static_cast<T>(s);
  }
  for (std::size_t n = 0; n < N; ++n) {
    const T* wrow = &weight[n * M];
    T* gwrow = &g.weight[n * M];
    for (std::size_t b = 0; b < B; ++b) {
      const T* gy = &grad_out[b * M];
      if (need_input) g.input[b * N + n] = static_cast<T>(detail::dot(gy, wrow, M));
      const T xv = input[b * N + n];
      if (xv == T{0}) continue;
      for (std::size_t m = 0; m < M; ++m) gwrow[m] += xv * gy[m];
    }
  }
  return g;
}

// ---------------------------------------------------------------------------
// Elementwise activations.
// ---------------------------------------------------------------------------

template <class T>
T sigmoid(T v) {
  if (v >= T{0}) return T{1} / (T{1} + std::exp(-v));
  const T e = std::exp(v);
  return e / (T{1} + e);
}

template <class T>
Tensor<T> relu_forward(const Tensor<T>& input) {
  Tensor<T> out = input;
  for (T& v : out.storage()) v = v > T{0} ? v : T{0};
  return out;
}

template <class T>
Tensor<T> relu_backward(const Tensor<T>& input, const Tensor<T>& grad_out) {
  Tensor<T> g = grad_out;
  for (std::size_t k = 0; k < g.size(); ++k)
    if (!(input[k] > T{0})) g[k] = T{0};
  return g;
}

template <class T>
Tensor<T> sigmoid_forward(const Tensor<T>& input) {
  Tensor<T> out = input;
  for (T& v : out.storage()) v = sigmoid(v);
  return out;
}

/// Gradient in terms of the forward output s: g * s * (1 - s).
template <class T>
Tensor<T> sigmoid_backward(const Tensor<T>& output, const Tensor<T>& grad_out) {
  Tensor<T> g = grad_out;
  for (std::size_t k = 0; k < g.size(); ++k) g[k] *= output[k] * (T{1} - output[k]);
  return g;
}

}  // namespace ocpad::nn
