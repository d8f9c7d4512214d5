#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "eegnet/error.hpp"
#include "eegnet/lstm.hpp"
#include "eegnet/model.hpp"
#include "eegnet/rng.hpp"
#include "eegnet/tensor.hpp"

namespace eegnet {

template <class Scalar>
struct ForwardCache {
  std::size_t batch = 0;
  std::vector<LstmLayerCache<Scalar>> lstm;
  RowMatrix<Scalar> last_hidden;   // [B, h_last]
  RowMatrix<Scalar> dense_act;     // [B, dense_hidden], sigmoid output
  RowMatrix<Scalar> dropout_mask;  // [B, dense_hidden], 0 or 1/(1-rate)
  RowMatrix<Scalar> log_probs;     // [B, classes]
};

template <class Scalar>
struct ForwardResult {
  Tensor<Scalar> probs;  // [B, classes]
  ForwardCache<Scalar> cache;
};

namespace detail {

template <class Scalar>
void require_finite(const RowMatrix<Scalar>& m, const std::string& layer) {
  if (!m.allFinite()) throw NumericError("non-finite values produced by layer " + layer);
}

// [B, T, F] batch-major tensor -> [T*B, F] time-major matrix.
template <class Scalar>
RowMatrix<Scalar> to_time_major(const Tensor<Scalar>& batch) {
  const std::size_t b = batch.dim(0), t = batch.dim(1), f = batch.dim(2);
  RowMatrix<Scalar> x(static_cast<Eigen::Index>(t * b), static_cast<Eigen::Index>(f));
  for (std::size_t bi = 0; bi < b; ++bi)
    for (std::size_t ti = 0; ti < t; ++ti) {
      const Scalar* src = batch.ptr() + (bi * t + ti) * f;
      Scalar* dst = &x(static_cast<Eigen::Index>(ti * b + bi), 0);
      std::copy(src, src + f, dst);
    }
  return x;
}

}  // namespace detail

/// Runs the network on a [B, sequence_length, input_features] batch.
///
/// With training=true, inverted dropout is applied to the hidden dense
/// activations; the mask is drawn from `rng` unless `fixed_mask` ([B, hidden])
/// is supplied. With training=false the rng is never touched.
template <class Scalar>
ForwardResult<Scalar> forward(const ModelParams<Scalar>& params, const Tensor<Scalar>& batch, bool training,
                              Rng& rng, const Tensor<Scalar>* fixed_mask = nullptr) {
  const auto& cfg = params.config;
  if (batch.shape.size() != 3 || batch.dim(1) != cfg.sequence_length || batch.dim(2) != cfg.input_features)
    throw ConfigError("forward: batch shape " + shape_string(batch.shape) + " does not match [B," +
                      std::to_string(cfg.sequence_length) + "," + std::to_string(cfg.input_features) + "]");
  if (!batch.all_finite()) throw NumericError("forward: input batch contains non-finite values");

  const std::size_t b = batch.dim(0);
  const std::size_t steps = cfg.sequence_length;
  const auto bi = static_cast<Eigen::Index>(b);

  ForwardResult<Scalar> result;
  auto& cache = result.cache;
  cache.batch = b;
  cache.lstm.resize(params.lstm.size());

  RowMatrix<Scalar> x = detail::to_time_major(batch);
  for (std::size_t l = 0; l < params.lstm.size(); ++l) {
    lstm_layer_forward(params.lstm[l], std::move(x), steps, b, cache.lstm[l]);
    detail::require_finite(cache.lstm[l].hidden, ModelParams<Scalar>::lstm_name(l));
    if (l + 1 < params.lstm.size()) x = cache.lstm[l].hidden;
  }
  cache.last_hidden = cache.lstm.back().hidden.bottomRows(bi);

  const auto& hid = params.hidden;
  ConstMatrixMap<Scalar> w1(hid.weights.ptr(), hid.out_size(), hid.in_size());
  Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>> b1(hid.bias.ptr(), hid.out_size());
  cache.dense_act.noalias() = cache.last_hidden * w1.transpose();
  cache.dense_act.rowwise() += b1;
  cache.dense_act = cache.dense_act.unaryExpr([](Scalar v) { return sigmoid(v); });
  detail::require_finite(cache.dense_act, "dense_1");

  const auto units = static_cast<Eigen::Index>(hid.out_size());
  cache.dropout_mask = RowMatrix<Scalar>::Ones(bi, units);
  if (training && fixed_mask) {
    if (fixed_mask->shape != Shape{b, hid.out_size()}) throw ConfigError("forward: dropout mask has wrong shape");
    cache.dropout_mask = ConstMatrixMap<Scalar>(fixed_mask->ptr(), bi, units);
  } else if (training && cfg.dropout_rate > 0.0) {
    const auto keep_scale = static_cast<Scalar>(1.0 / (1.0 - cfg.dropout_rate));
    for (Eigen::Index r = 0; r < bi; ++r)
      for (Eigen::Index c = 0; c < units; ++c)
        cache.dropout_mask(r, c) = rng.uniform() < cfg.dropout_rate ? Scalar{0} : keep_scale;
  }
  const RowMatrix<Scalar> dropped = cache.dense_act.cwiseProduct(cache.dropout_mask);

  const auto& out = params.output;
  ConstMatrixMap<Scalar> w2(out.weights.ptr(), out.out_size(), out.in_size());
  Eigen::Map<const Eigen::Matrix<Scalar, 1, Eigen::Dynamic>> b2(out.bias.ptr(), out.out_size());
  RowMatrix<Scalar> logits = dropped * w2.transpose();
  logits.rowwise() += b2;
  detail::require_finite(logits, "dense_2");

  cache.log_probs.resize(bi, logits.cols());
  result.probs = Tensor<Scalar>({b, out.out_size()});
  for (Eigen::Index r = 0; r < bi; ++r) {
    const Scalar mx = logits.row(r).maxCoeff();
    const Scalar lse = mx + std::log((logits.row(r).array() - mx).exp().sum());
    cache.log_probs.row(r) = logits.row(r).array() - lse;
    for (Eigen::Index c = 0; c < logits.cols(); ++c)
      result.probs[static_cast<std::size_t>(r * logits.cols() + c)] = std::exp(cache.log_probs(r, c));
  }
  return result;
}

template <class Scalar>
struct LossAndGrads {
  Scalar loss{};
  ModelParams<Scalar> grads;
  Tensor<Scalar> probs;
};

/// Mean sparse categorical cross-entropy and its gradient w.r.t. every
/// parameter, by backpropagation through the dense layers, the dropout mask
/// and all LSTM layers over every time step.
template <class Scalar>
LossAndGrads<Scalar> loss_and_grads(const ModelParams<Scalar>& params, const Tensor<Scalar>& batch,
                                    std::span<const int> labels, Rng& rng, const Tensor<Scalar>* fixed_mask = nullptr,
                                    bool training = true) {
  const std::size_t b = batch.shape.empty() ? 0 : batch.dim(0);
  if (labels.size() != b) throw ConfigError("loss_and_grads: label count does not match batch size");
  const auto classes = static_cast<int>(params.config.num_classes);
  for (int y : labels)
    if (y < 0 || y >= classes) throw ConfigError("loss_and_grads: label " + std::to_string(y) + " out of range");

  auto fwd = forward(params, batch, training, rng, fixed_mask);
  const auto& cache = fwd.cache;
  const auto bi = static_cast<Eigen::Index>(b);

  LossAndGrads<Scalar> out;
  out.grads = params.zeros_like();
  Scalar loss{0};
  RowMatrix<Scalar> d_logits = cache.log_probs.array().exp();
  for (Eigen::Index r = 0; r < bi; ++r) {
    loss -= cache.log_probs(r, labels[static_cast<std::size_t>(r)]);
    d_logits(r, labels[static_cast<std::size_t>(r)]) -= Scalar{1};
  }
  const Scalar inv_b = Scalar{1} / static_cast<Scalar>(b);
  out.loss = loss * inv_b;
  d_logits *= inv_b;
  if (!std::isfinite(out.loss)) throw NumericError("loss_and_grads: non-finite loss");

  // Output layer.
  const auto& o = params.output;
  auto& go = out.grads.output;
  const RowMatrix<Scalar> dropped = cache.dense_act.cwiseProduct(cache.dropout_mask);
  MatrixMap<Scalar>(go.weights.ptr(), o.out_size(), o.in_size()).noalias() = d_logits.transpose() * dropped;
  Eigen::Map<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>(go.bias.ptr(), o.out_size()) = d_logits.colwise().sum();
  RowMatrix<Scalar> d_act = d_logits * ConstMatrixMap<Scalar>(o.weights.ptr(), o.out_size(), o.in_size());

  // Dropout and sigmoid hidden layer.
  const auto& hid = params.hidden;
  auto& gh = out.grads.hidden;
  RowMatrix<Scalar> d_pre = d_act.cwiseProduct(cache.dropout_mask)
                                .cwiseProduct(cache.dense_act)
                                .cwiseProduct((Scalar{1} - cache.dense_act.array()).matrix());
  MatrixMap<Scalar>(gh.weights.ptr(), hid.out_size(), hid.in_size()).noalias() =
      d_pre.transpose() * cache.last_hidden;
  Eigen::Map<Eigen::Matrix<Scalar, 1, Eigen::Dynamic>>(gh.bias.ptr(), hid.out_size()) = d_pre.colwise().sum();
  const RowMatrix<Scalar> d_last = d_pre * ConstMatrixMap<Scalar>(hid.weights.ptr(), hid.out_size(), hid.in_size());

  // LSTM stack; only the final step of the top layer feeds the dense head.
  const auto& top = cache.lstm.back();
  RowMatrix<Scalar> d_hidden = RowMatrix<Scalar>::Zero(top.hidden.rows(), top.hidden.cols());
  d_hidden.bottomRows(bi) = d_last;
  for (std::size_t l = params.lstm.size(); l-- > 0;) {
    d_hidden = lstm_layer_backward(params.lstm[l], cache.lstm[l], d_hidden, out.grads.lstm[l]);
  }

  bool finite = true;
  out.grads.for_each_tensor([&](const std::string&, const Tensor<Scalar>& t) { finite = finite && t.all_finite(); });
  if (!finite) throw NumericError("loss_and_grads: non-finite gradients");
  out.probs = std::move(fwd.probs);
  return out;
}

/// Index of the largest probability per row; ties resolve to the lowest class.
template <class Scalar>
std::vector<int> argmax_rows(const Tensor<Scalar>& probs) {
  const std::size_t b = probs.dim(0), c = probs.dim(1);
  std::vector<int> out(b);
  for (std::size_t r = 0; r < b; ++r) {
    std::size_t best = 0;
    for (std::size_t k = 1; k < c; ++k)
      if (probs[r * c + k] > probs[r * c + best]) best = k;
    out[r] = static_cast<int>(best);
  }
  return out;
}

}  // namespace eegnet
