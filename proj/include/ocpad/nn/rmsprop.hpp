#pragma once

#include <cmath>
#include <string>

#include "ocpad/nn/network.hpp"

namespace ocpad::nn {

struct RmsPropOptions {
  double learning_rate = 1e-3;
  double rho = 0.9;
  double epsilon = 1e-7;

  void validate() const {
    if (!(learning_rate > 0.0)) throw UsageError("rmsprop: learning rate must be > 0");
    if (!(rho > 0.0 && rho < 1.0)) throw UsageError("rmsprop: rho must lie in (0, 1)");
    if (!(epsilon > 0.0)) throw UsageError("rmsprop: epsilon must be > 0");
  }
};

/// acc <- rho*acc + (1-rho)*g^2 ;  p <- p - lr*g / (sqrt(acc) + eps), elementwise.
template <class T>
void rmsprop_update(Tensor<T>& param, Tensor<T>& acc, const Tensor<T>& grad, const RmsPropOptions& o) {
  if (param.shape() != grad.shape() || acc.shape() != param.shape())
    throw ContractError("rmsprop: parameter, gradient and accumulator shapes differ");
  if (!grad.all_finite()) throw NumericError("rmsprop: non-finite gradient");
  const T rho = static_cast<T>(o.rho), one_minus = static_cast<T>(1.0 - o.rho);
  const T lr = static_cast<T>(o.learning_rate), eps = static_cast<T>(o.epsilon);
  for (std::size_t k = 0; k < param.size(); ++k) {
    const T g = grad[k];
    acc[k] = rho * acc[k] + one_minus * g * g;
    param[k] -= lr * g / (std::sqrt(acc[k]) + eps);
  }
}

/// Applies one update to every parametric layer. Gradients are checked for
/// finiteness first so a failed step leaves the store untouched.
template <class T>
void rmsprop_step(ParamStore<T>& params, const Gradients<T>& grads, const RmsPropOptions& o) {
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    if (params.weights[i].empty()) continue;
    if (!grads.weights[i].all_finite() || !grads.biases[i].all_finite())
      throw NumericError("non-finite gradient in layer " + std::to_string(i));
  }
  for (std::size_t i = 0; i < params.weights.size(); ++i) {
    if (params.weights[i].empty()) continue;
    rmsprop_update(params.weights[i], params.weight_acc[i], grads.weights[i], o);
    rmsprop_update(params.biases[i], params.bias_acc[i], grads.biases[i], o);
  }
}

}  // namespace ocpad::nn
