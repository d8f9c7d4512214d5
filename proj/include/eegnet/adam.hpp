#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "eegnet/error.hpp"
#include "eegnet/model.hpp"

namespace eegnet {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <class Scalar>
struct OptimizerState {
  AdamConfig hyper;
  std::uint64_t step = 0;
  ModelParams<Scalar> first_moment;
  ModelParams<Scalar> second_moment;

  OptimizerState() = default;
  OptimizerState(const ModelParams<Scalar>& params, AdamConfig cfg)
      : hyper(cfg), first_moment(params.zeros_like()), second_moment(params.zeros_like()) {}
};

/// Bias-corrected Adam on one flat tensor, `step` being the 1-based step:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2
///   w <- w - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
template <class Scalar>
void adam_update(std::span<Scalar> w, std::span<const Scalar> g, std::span<Scalar> m, std::span<Scalar> v,
                 std::uint64_t step, const AdamConfig& h) {
  const double t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(h.beta1, t);
  const double c2 = 1.0 - std::pow(h.beta2, t);
  const auto b1 = static_cast<Scalar>(h.beta1);
  const auto b2 = static_cast<Scalar>(h.beta2);
  for (std::size_t i = 0; i < w.size(); ++i) {
    const Scalar gi = g[i];
    m[i] = b1 * m[i] + (Scalar{1} - b1) * gi;
    v[i] = b2 * v[i] + (Scalar{1} - b2) * gi * gi;
    const double m_hat = static_cast<double>(m[i]) / c1;
    const double v_hat = static_cast<double>(v[i]) / c2;
    w[i] -= static_cast<Scalar>(h.learning_rate * m_hat / (std::sqrt(v_hat) + h.epsilon));
  }
}

template <class Scalar>
void adam_step(ModelParams<Scalar>& params, const ModelParams<Scalar>& grads, OptimizerState<Scalar>& state) {
  if (params.config != grads.config || params.config != state.first_moment.config)
    throw ConfigError("adam_step: parameter, gradient and moment shapes differ");
  ++state.step;

  std::vector<const Tensor<Scalar>*> g;
  std::vector<Tensor<Scalar>*> m, v;
  grads.for_each_tensor([&](const std::string&, const Tensor<Scalar>& x) { g.push_back(&x); });
  state.first_moment.for_each_tensor([&](const std::string&, Tensor<Scalar>& x) { m.push_back(&x); });
  state.second_moment.for_each_tensor([&](const std::string&, Tensor<Scalar>& x) { v.push_back(&x); });

  std::size_t idx = 0;
  params.for_each_tensor([&](const std::string& name, Tensor<Scalar>& w) {
    if (g[idx]->shape != w.shape) throw ConfigError("adam_step: gradient shape mismatch for " + name);
    adam_update<Scalar>(w.span(), g[idx]->span(), m[idx]->span(), v[idx]->span(), state.step, state.hyper);
    ++idx;
  });
}

}  // namespace eegnet
