#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eegnet/error.hpp"
#include "eegnet/rng.hpp"
#include "eegnet/tensor.hpp"

namespace eegnet {

enum class Activation { none, sigmoid, softmax };

inline const char* to_string(Activation a) {
  switch (a) {
    case Activation::sigmoid: return "sigmoid";
    case Activation::softmax: return "softmax";
    default: return "none";
  }
}

/// Topology of the classifier: a stack of LSTM layers followed by a hidden
/// sigmoid dense layer, dropout, and a softmax output layer.
///
/// Inputs are [batch, sequence_length, input_features]; time is the recurrent
/// axis and each EEG channel is one feature.
struct ModelConfig {
  std::size_t input_features = 31;
  std::size_t sequence_length = 256;
  std::vector<std::size_t> lstm_sizes{256, 128, 64, 32, 16};
  std::vector<bool> return_sequences{true, true, true, true, false};
  std::size_t dense_hidden = 64;
  std::size_t num_classes = 3;
  double dropout_rate = 0.3;

  void validate() const {
    if (input_features == 0 || sequence_length == 0 || dense_hidden == 0 || num_classes < 2)
      throw ConfigError("model: input_features, sequence_length, dense_hidden must be positive and num_classes >= 2");
    if (lstm_sizes.empty()) throw ConfigError("model: at least one LSTM layer is required");
    if (lstm_sizes.size() != return_sequences.size())
      throw ConfigError("model: lstm_sizes and return_sequences differ in length");
    for (auto h : lstm_sizes)
      if (h == 0) throw ConfigError("model: LSTM sizes must be positive");
    if (return_sequences.back()) throw ConfigError("model: the last LSTM layer must not return sequences");
    for (std::size_t i = 0; i + 1 < return_sequences.size(); ++i)
      if (!return_sequences[i])
        throw ConfigError("model: LSTM layer " + std::to_string(i + 1) +
                          " feeds another LSTM layer and must return sequences");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("model: dropout_rate must lie in [0, 1)");
  }

  bool operator==(const ModelConfig&) const = default;
};

inline void to_json(nlohmann::json& j, const ModelConfig& c) {
  j = nlohmann::json{{"input_features", c.input_features}, {"sequence_length", c.sequence_length},
                     {"lstm_sizes", c.lstm_sizes},         {"return_sequences", c.return_sequences},
                     {"dense_hidden", c.dense_hidden},     {"num_classes", c.num_classes},
                     {"dropout_rate", c.dropout_rate}};
}

inline void from_json(const nlohmann::json& j, ModelConfig& c) {
  static const char* known[] = {"input_features", "sequence_length", "lstm_sizes", "return_sequences",
                                "dense_hidden",   "num_classes",     "dropout_rate"};
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(std::begin(known), std::end(known), it.key()) == std::end(known))
      throw ConfigError("model: unknown key '" + it.key() + "'");
  }
  ModelConfig d;
  c.input_features = j.value("input_features", d.input_features);
  c.sequence_length = j.value("sequence_length", d.sequence_length);
  c.lstm_sizes = j.value("lstm_sizes", d.lstm_sizes);
  if (j.contains("return_sequences")) {
    c.return_sequences = j.at("return_sequences").get<std::vector<bool>>();
  } else {
    c.return_sequences.assign(c.lstm_sizes.size(), true);
    if (!c.return_sequences.empty()) c.return_sequences.back() = false;
  }
  c.dense_hidden = j.value("dense_hidden", d.dense_hidden);
  c.num_classes = j.value("num_classes", d.num_classes);
  c.dropout_rate = j.value("dropout_rate", d.dropout_rate);
  c.validate();
}

// Gate blocks are stacked along the first axis in the order
// input, forget, cell candidate, output.
enum Gate : std::size_t { kInputGate = 0, kForgetGate = 1, kCellGate = 2, kOutputGate = 3 };

template <class Scalar>
struct LstmLayerParams {
  std::size_t input_size = 0;
  std::size_t hidden_size = 0;
  Tensor<Scalar> w_input;      // [4h, d]
  Tensor<Scalar> w_recurrent;  // [4h, h]
  Tensor<Scalar> bias;         // [4h]

  LstmLayerParams() = default;
  LstmLayerParams(std::size_t d, std::size_t h)
      : input_size(d), hidden_size(h), w_input({4 * h, d}), w_recurrent({4 * h, h}), bias({4 * h}) {}

  bool operator==(const LstmLayerParams&) const = default;
};

template <class Scalar>
struct DenseLayerParams {
  Activation activation = Activation::none;
  Tensor<Scalar> weights;  // [out, in]
  Tensor<Scalar> bias;     // [out]

  DenseLayerParams() = default;
  DenseLayerParams(std::size_t in, std::size_t out, Activation act)
      : activation(act), weights({out, in}), bias({out}) {}

  std::size_t in_size() const { return weights.dim(1); }
  std::size_t out_size() const { return weights.dim(0); }

  bool operator==(const DenseLayerParams&) const = default;
};

/// Every learnable tensor of the network, in layer order:
/// lstm_1 .. lstm_N, dense_1 (hidden, sigmoid), dense_2 (output, softmax).
/// Gradients use the same type.
template <class Scalar>
struct ModelParams {
  ModelConfig config;
  std::vector<LstmLayerParams<Scalar>> lstm;
  DenseLayerParams<Scalar> hidden;
  DenseLayerParams<Scalar> output;

  ModelParams() = default;
  explicit ModelParams(const ModelConfig& cfg) : config(cfg) {
    cfg.validate();
    std::size_t in = cfg.input_features;
    for (auto h : cfg.lstm_sizes) {
      lstm.emplace_back(in, h);
      in = h;
    }
    hidden = DenseLayerParams<Scalar>(in, cfg.dense_hidden, Activation::sigmoid);
    output = DenseLayerParams<Scalar>(cfg.dense_hidden, cfg.num_classes, Activation::softmax);
  }

  static std::string lstm_name(std::size_t i) { return "lstm_" + std::to_string(i + 1); }

  // Visits (name, tensor) pairs in a fixed order; names look like
  // "lstm_3/w_recurrent" or "dense_2/bias".
  template <class Fn>
  void for_each_tensor(Fn&& fn) {
    for (std::size_t i = 0; i < lstm.size(); ++i) {
      const auto base = lstm_name(i);
      fn(base + "/w_input", lstm[i].w_input);
      fn(base + "/w_recurrent", lstm[i].w_recurrent);
      fn(base + "/bias", lstm[i].bias);
    }
    fn(std::string("dense_1/weights"), hidden.weights);
    fn(std::string("dense_1/bias"), hidden.bias);
    fn(std::string("dense_2/weights"), output.weights);
    fn(std::string("dense_2/bias"), output.bias);
  }

  template <class Fn>
  void for_each_tensor(Fn&& fn) const {
    const_cast<ModelParams*>(this)->for_each_tensor(
        [&](const std::string& name, Tensor<Scalar>& t) { fn(name, static_cast<const Tensor<Scalar>&>(t)); });
  }

  std::size_t scalar_count() const {
    std::size_t n = 0;
    for_each_tensor([&](const std::string&, const Tensor<Scalar>& t) { n += t.size(); });
    return n;
  }

  ModelParams zeros_like() const {
    ModelParams z = *this;
    z.for_each_tensor([](const std::string&, Tensor<Scalar>& t) { t.fill(Scalar{0}); });
    return z;
  }

  template <class Other>
  ModelParams<Other> cast() const {
    ModelParams<Other> out(config);
    for (std::size_t i = 0; i < lstm.size(); ++i) {
      out.lstm[i].w_input = lstm[i].w_input.template cast<Other>();
      out.lstm[i].w_recurrent = lstm[i].w_recurrent.template cast<Other>();
      out.lstm[i].bias = lstm[i].bias.template cast<Other>();
    }
    out.hidden.weights = hidden.weights.template cast<Other>();
    out.hidden.bias = hidden.bias.template cast<Other>();
    out.output.weights = output.weights.template cast<Other>();
    out.output.bias = output.bias.template cast<Other>();
    return out;
  }

  bool operator==(const ModelParams&) const = default;
};

struct LayerCount {
  std::string name;
  std::string kind;  // "lstm" or "dense"
  std::size_t inputs = 0;
  std::size_t units = 0;
  std::size_t params = 0;
};

constexpr std::size_t lstm_param_count(std::size_t input_size, std::size_t hidden_size) {
  return 4 * hidden_size * (input_size + hidden_size + 1);
}

constexpr std::size_t dense_param_count(std::size_t in, std::size_t out) { return out * (in + 1); }

inline std::vector<LayerCount> param_breakdown(const ModelConfig& cfg) {
  cfg.validate();
  std::vector<LayerCount> rows;
  std::size_t in = cfg.input_features;
  for (std::size_t i = 0; i < cfg.lstm_sizes.size(); ++i) {
    const auto h = cfg.lstm_sizes[i];
    rows.push_back({"lstm_" + std::to_string(i + 1), "lstm", in, h, lstm_param_count(in, h)});
    in = h;
  }
  rows.push_back({"dense_1", "dense", in, cfg.dense_hidden, dense_param_count(in, cfg.dense_hidden)});
  rows.push_back({"dense_2", "dense", cfg.dense_hidden, cfg.num_classes,
                  dense_param_count(cfg.dense_hidden, cfg.num_classes)});
  return rows;
}

inline std::size_t param_count(const ModelConfig& cfg) {
  std::size_t total = 0;
  for (const auto& row : param_breakdown(cfg)) total += row.params;
  return total;
}

// Total reported for the original network; the layer list above sums to a
// different number (558 275 for the default configuration).
inline constexpr std::size_t kReportedParamCount = 2'062'531;

inline double glorot_bound(std::size_t fan_in, std::size_t fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

namespace detail {
template <class Scalar>
void glorot_fill(Tensor<Scalar>& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = glorot_bound(fan_in, fan_out);
  for (auto& v : t.data) v = static_cast<Scalar>(rng.uniform(-bound, bound));
}
}  // namespace detail

/// Glorot-uniform weights (input, recurrent and dense alike), zero biases,
/// and LSTM forget-gate bias 1. Fan sizes follow the [4h, d] / [4h, h] layout.
template <class Scalar = float>
ModelParams<Scalar> init_params(const ModelConfig& cfg, Rng& rng) {
  ModelParams<Scalar> p(cfg);
  for (auto& layer : p.lstm) {
    const auto h = layer.hidden_size;
    detail::glorot_fill(layer.w_input, layer.input_size, 4 * h, rng);
    detail::glorot_fill(layer.w_recurrent, h, 4 * h, rng);
    for (std::size_t k = 0; k < h; ++k) layer.bias[kForgetGate * h + k] = Scalar{1};
  }
  detail::glorot_fill(p.hidden.weights, p.hidden.in_size(), p.hidden.out_size(), rng);
  detail::glorot_fill(p.output.weights, p.output.in_size(), p.output.out_size(), rng);
  return p;
}

}  // namespace eegnet
