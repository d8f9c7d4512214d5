#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "eegnet/error.hpp"
#include "eegnet/model.hpp"

namespace eegnet {

template <class Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class Scalar>
using MatrixMap = Eigen::Map<RowMatrix<Scalar>>;

template <class Scalar>
using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;

template <class Scalar>
inline Scalar sigmoid(Scalar x) noexcept {
  return Scalar{1} / (Scalar{1} + std::exp(-x));
}

template <class Scalar>
struct LstmStep {
  std::vector<Scalar> h;
  std::vector<Scalar> c;
  // Activated gates (i, f, g, o) and tanh(c), kept for the backward pass.
  std::vector<Scalar> gates;
  std::vector<Scalar> tanh_c;
};

/// One time step of a single sequence:
///   z = W_in x + W_rec h_prev + b,  i,f,o = sigmoid(z_i,z_f,z_o),  g = tanh(z_g)
///   c = f * c_prev + i * g,  h = o * tanh(c)
template <class Scalar>
LstmStep<Scalar> lstm_cell_step(std::span<const Scalar> x, std::span<const Scalar> h_prev,
                                std::span<const Scalar> c_prev, const LstmLayerParams<Scalar>& p) {
  const std::size_t d = p.input_size;
  const std::size_t h = p.hidden_size;
  if (x.size() != d || h_prev.size() != h || c_prev.size() != h)
    throw ConfigError("lstm_cell_step: expected x[" + std::to_string(d) + "], h[" + std::to_string(h) + "], c[" +
                      std::to_string(h) + "]");
  ConstMatrixMap<Scalar> w_in(p.w_input.ptr(), 4 * h, d);
  ConstMatrixMap<Scalar> w_rec(p.w_recurrent.ptr(), 4 * h, h);
  Eigen::Map<const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>> xv(x.data(), d), hv(h_prev.data(), h),
      bv(p.bias.ptr(), 4 * h);
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> z = w_in * xv + w_rec * hv + bv;

  LstmStep<Scalar> out;
  out.h.resize(h);
  out.c.resize(h);
  out.gates.resize(4 * h);
  out.tanh_c.resize(h);
  for (std::size_t k = 0; k < h; ++k) {
    const Scalar i = sigmoid(z[kInputGate * h + k]);
    const Scalar f = sigmoid(z[kForgetGate * h + k]);
    const Scalar g = std::tanh(z[kCellGate * h + k]);
    const Scalar o = sigmoid(z[kOutputGate * h + k]);
    out.gates[kInputGate * h + k] = i;
    out.gates[kForgetGate * h + k] = f;
    out.gates[kCellGate * h + k] = g;
    out.gates[kOutputGate * h + k] = o;
    out.c[k] = f * c_prev[k] + i * g;
    out.tanh_c[k] = std::tanh(out.c[k]);
    out.h[k] = o * out.tanh_c[k];
  }
  return out;
}

// Activations of one LSTM layer over a time-major batch: row t*B + b holds
// sequence b at step t.
template <class Scalar>
struct LstmLayerCache {
  std::size_t steps = 0;
  std::size_t batch = 0;
  RowMatrix<Scalar> input;   // [T*B, d]
  RowMatrix<Scalar> gates;   // [T*B, 4h] activated
  RowMatrix<Scalar> cell;    // [T*B, h]
  RowMatrix<Scalar> tanh_c;  // [T*B, h]
  RowMatrix<Scalar> hidden;  // [T*B, h]
};

template <class Scalar>
void lstm_layer_forward(const LstmLayerParams<Scalar>& p, RowMatrix<Scalar> input, std::size_t steps,
                        std::size_t batch, LstmLayerCache<Scalar>& cache) {
  const std::size_t d = p.input_size;
  const std::size_t h = p.hidden_size;
  const auto rows = static_cast<Eigen::Index>(steps * batch);
  const auto b = static_cast<Eigen::Index>(batch);
  if (input.rows() != rows || input.cols() != static_cast<Eigen::Index>(d))
    throw ConfigError("lstm layer: input has wrong shape");

  ConstMatrixMap<Scalar> w_in(p.w_input.ptr(), 4 * h, d);
  const RowMatrix<Scalar> w_rec_t = ConstMatrixMap<Scalar>(p.w_recurrent.ptr(), 4 * h, h).transpose();
  Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>> bias(p.bias.ptr(), 4 * h);

  cache.steps = steps;
  cache.batch = batch;
  cache.input = std::move(input);
  cache.gates.noalias() = cache.input * w_in.transpose();
  cache.gates.rowwise() += bias;
  cache.cell.resize(rows, h);
  cache.tanh_c.resize(rows, h);
  cache.hidden.resize(rows, h);

  for (std::size_t t = 0; t < steps; ++t) {
    const auto r0 = static_cast<Eigen::Index>(t * batch);
    auto z = cache.gates.middleRows(r0, b);
    if (t > 0) z.noalias() += cache.hidden.middleRows(r0 - b, b) * w_rec_t;
    for (Eigen::Index r = 0; r < b; ++r) {
      Scalar* zr = &z(r, 0);
      const Scalar* c_prev = t > 0 ? &cache.cell(r0 - b + r, 0) : nullptr;
      Scalar* c = &cache.cell(r0 + r, 0);
      Scalar* tc = &cache.tanh_c(r0 + r, 0);
      Scalar* hv = &cache.hidden(r0 + r, 0);
      for (std::size_t k = 0; k < h; ++k) {
        const Scalar i = sigmoid(zr[kInputGate * h + k]);
        const Scalar f = sigmoid(zr[kForgetGate * h + k]);
        const Scalar g = std::tanh(zr[kCellGate * h + k]);
        const Scalar o = sigmoid(zr[kOutputGate * h + k]);
        zr[kInputGate * h + k] = i;
        zr[kForgetGate * h + k] = f;
        zr[kCellGate * h + k] = g;
        zr[kOutputGate * h + k] = o;
        c[k] = (c_prev ? f * c_prev[k] : Scalar{0}) + i * g;
        tc[k] = std::tanh(c[k]);
        hv[k] = o * tc[k];
      }
    }
  }
}

/// Backpropagation through time for one layer. `d_hidden` is the loss
/// gradient w.r.t. every output h_t ([T*B, h], time-major). Writes parameter
/// gradients into `grads` and returns the gradient w.r.t. the layer input.
template <class Scalar>
RowMatrix<Scalar> lstm_layer_backward(const LstmLayerParams<Scalar>& p, const LstmLayerCache<Scalar>& cache,
                                      const RowMatrix<Scalar>& d_hidden, LstmLayerParams<Scalar>& grads) {
  const std::size_t d = p.input_size;
  const std::size_t h = p.hidden_size;
  const std::size_t steps = cache.steps;
  const auto b = static_cast<Eigen::Index>(cache.batch);
  const auto rows = static_cast<Eigen::Index>(steps * cache.batch);

  ConstMatrixMap<Scalar> w_in(p.w_input.ptr(), 4 * h, d);
  ConstMatrixMap<Scalar> w_rec(p.w_recurrent.ptr(), 4 * h, h);

  RowMatrix<Scalar> dz(rows, 4 * h);
  RowMatrix<Scalar> dh_next = RowMatrix<Scalar>::Zero(b, h);
  RowMatrix<Scalar> dc_next = RowMatrix<Scalar>::Zero(b, h);

  for (std::size_t t = steps; t-- > 0;) {
    const auto r0 = static_cast<Eigen::Index>(t * cache.batch);
    for (Eigen::Index r = 0; r < b; ++r) {
      const Scalar* gates = &cache.gates(r0 + r, 0);
      const Scalar* tc = &cache.tanh_c(r0 + r, 0);
      const Scalar* c_prev = t > 0 ? &cache.cell(r0 - b + r, 0) : nullptr;
      const Scalar* dh_out = &d_hidden(r0 + r, 0);
      Scalar* dzr = &dz(r0 + r, 0);
      for (std::size_t k = 0; k < h; ++k) {
        const Scalar i = gates[kInputGate * h + k];
        const Scalar f = gates[kForgetGate * h + k];
        const Scalar g = gates[kCellGate * h + k];
        const Scalar o = gates[kOutputGate * h + k];
        const Scalar dh = dh_out[k] + dh_next(r, k);
        const Scalar dc = dh * o * (Scalar{1} - tc[k] * tc[k]) + dc_next(r, k);
        const Scalar cp = c_prev ? c_prev[k] : Scalar{0};
        dzr[kInputGate * h + k] = dc * g * i * (Scalar{1} - i);
        dzr[kForgetGate * h + k] = dc * cp * f * (Scalar{1} - f);
        dzr[kCellGate * h + k] = dc * i * (Scalar{1} - g * g);
        dzr[kOutputGate * h + k] = dh * tc[k] * o * (Scalar{1} - o);
        dc_next(r, k) = dc * f;
      }
    }
    dh_next.noalias() = dz.middleRows(r0, b) * w_rec;
  }

  MatrixMap<Scalar> gw_in(grads.w_input.ptr(), 4 * h, d);
  MatrixMap<Scalar> gw_rec(grads.w_recurrent.ptr(), 4 * h, h);
  Eigen::Map<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>> gb(grads.bias.ptr(), 4 * h);
  gw_in.noalias() = dz.transpose() * cache.input;
  if (steps > 1) {
    gw_rec.noalias() = dz.bottomRows(rows - b).transpose() * cache.hidden.topRows(rows - b);
  } else {
    gw_rec.setZero();
  }
  gb = dz.colwise().sum();
  return dz * w_in;
}

}  // namespace eegnet
