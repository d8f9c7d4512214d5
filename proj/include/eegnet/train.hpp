#pragma once

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eegnet/adam.hpp"
#include "eegnet/augmentation.hpp"
#include "eegnet/checkpoint.hpp"
#include "eegnet/dataset.hpp"
#include "eegnet/error.hpp"
#include "eegnet/hash.hpp"
#include "eegnet/metrics.hpp"
#include "eegnet/model.hpp"
#include "eegnet/network.hpp"

namespace eegnet {

struct TrainConfig {
  std::size_t epochs = 1;
  std::size_t batch_size = 32;
  AdamConfig adam;
  std::uint64_t seed = 0;
  bool shuffle = true;
  bool audit = false;  // record the trial keys of every batch in TrainHistory

  void validate() const {
    if (epochs < 1) throw ConfigError("train: epochs must be at least 1");
    if (batch_size < 1) throw ConfigError("train: batch_size must be at least 1");
    if (!(adam.learning_rate > 0.0)) throw ConfigError("train: learning rate must be positive");
  }
};

struct TrainHistory {
  std::vector<double> loss;      // mean batch loss per epoch
  std::vector<double> accuracy;  // training-mode accuracy per epoch
  std::vector<double> seconds;
  std::vector<std::vector<std::uint64_t>> batch_audit;
};

/// Model-ready sequences: inputs are [N, sequence_length, channels].
struct SequenceSet {
  Tensor<float> inputs;
  std::vector<int> labels;
  std::vector<std::uint64_t> keys;  // identity of the source recording, independent of band
  std::string subset = "raw";
  std::uint64_t data_hash = 0;

  std::size_t size() const { return labels.size(); }
};

struct PrepareOptions {
  Normalization normalization = Normalization::PerChannel;
};

inline std::uint64_t recording_key(const Trial& t) {
  Fnv1a h;
  h.str(t.participant_id);
  h.str(t.source_name);
  return h.digest();
}

/// Resamples each selected trial to the model's sequence length, optionally
/// rescales it (see Normalization), and transposes to time-major [T, channels].
inline SequenceSet prepare_sequences(const std::vector<Trial>& trials, std::span<const std::size_t> indices,
                                     const ModelConfig& cfg, PrepareOptions opts = {}) {
  if (indices.empty()) throw ConfigError("prepare_sequences: no trials selected");
  const std::size_t steps = cfg.sequence_length, feats = cfg.input_features;
  SequenceSet s;
  s.inputs = Tensor<float>({indices.size(), steps, feats});
  Fnv1a h;
  for (std::size_t n = 0; n < indices.size(); ++n) {
    const Trial& src = trials.at(indices[n]);
    if (src.channels() != feats)
      throw ConfigError("prepare_sequences: trial has " + std::to_string(src.channels()) + " channels, model expects " +
                        std::to_string(feats));
    Trial t = standardize_length(src, steps);
    if (opts.normalization == Normalization::PerChannel) t = normalize_per_channel(t);
    if (opts.normalization == Normalization::PerTrial) t = normalize_per_trial(t);
    float* dst = s.inputs.ptr() + n * steps * feats;
    for (std::size_t c = 0; c < feats; ++c) {
      const auto ch = t.channel(c);
      for (std::size_t j = 0; j < steps; ++j) dst[j * feats + c] = ch[j];
    }
    s.labels.push_back(src.label_index());
    s.keys.push_back(recording_key(src));
    h.u64(trial_hash(src));
  }
  s.subset = trials.at(indices[0]).band_tag;
  s.data_hash = h.digest();
  return s;
}

inline SequenceSet prepare_sequences(const std::vector<Trial>& trials, const ModelConfig& cfg,
                                     PrepareOptions opts = {}) {
  std::vector<std::size_t> all(trials.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return prepare_sequences(trials, all, cfg, opts);
}

namespace detail {

inline Tensor<float> gather_batch(const SequenceSet& data, std::span<const std::size_t> rows) {
  const std::size_t per = data.inputs.dim(1) * data.inputs.dim(2);
  Tensor<float> batch({rows.size(), data.inputs.dim(1), data.inputs.dim(2)});
  for (std::size_t i = 0; i < rows.size(); ++i)
    std::copy_n(data.inputs.ptr() + rows[i] * per, per, batch.ptr() + i * per);
  return batch;
}

}  // namespace detail

/// Mini-batch Adam training with fresh optimizer state. Each epoch visits the
/// data in an order shuffled by derive_seed(seed, {epoch}); dropout masks come
/// from derive_seed(seed, {epoch, batch, 1}). Same inputs, same result.
inline TrainHistory train(ModelParams<float>& params, const SequenceSet& data, const TrainConfig& cfg) {
  cfg.validate();
  if (data.size() == 0) throw ConfigError("train: dataset is empty");
  OptimizerState<float> opt(params, cfg.adam);
  TrainHistory hist;
  const std::size_t n = data.size();
  std::vector<std::size_t> order(n);

  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    if (cfg.shuffle) Rng(derive_seed(cfg.seed, {epoch})).shuffle(std::span<std::size_t>(order));

    double loss_sum = 0.0;
    std::size_t correct = 0, batches = 0;
    for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batches) {
      const std::span<const std::size_t> rows(order.data() + start, std::min(cfg.batch_size, n - start));
      const Tensor<float> batch = detail::gather_batch(data, rows);
      std::vector<int> labels;
      for (auto r : rows) labels.push_back(data.labels[r]);
      if (cfg.audit) {
        std::vector<std::uint64_t> keys;
        for (auto r : rows) keys.push_back(data.keys[r]);
        hist.batch_audit.push_back(std::move(keys));
      }

      Rng dropout(derive_seed(cfg.seed, {epoch, batches, 1}));
      LossAndGrads<float> lg;
      try {
        lg = loss_and_grads(params, batch, labels, dropout);
      } catch (const NumericError& e) {
        throw NumericError("train: epoch " + std::to_string(epoch + 1) + ", batch " + std::to_string(batches + 1) +
                           ": " + e.what());
      }
      loss_sum += static_cast<double>(lg.loss);
      const auto preds = argmax_rows(lg.probs);
      for (std::size_t i = 0; i < preds.size(); ++i) correct += preds[i] == labels[i];
      adam_step(params, lg.grads, opt);
    }
    hist.loss.push_back(loss_sum / static_cast<double>(batches));
    hist.accuracy.push_back(static_cast<double>(correct) / static_cast<double>(n));
    hist.seconds.push_back(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count());
  }
  return hist;
}

inline std::vector<int> predict(const ModelParams<float>& params, const SequenceSet& data, std::size_t chunk = 64) {
  std::vector<int> preds;
  Rng unused(0);
  std::vector<std::size_t> rows;
  for (std::size_t start = 0; start < data.size(); start += chunk) {
    rows.clear();
    for (std::size_t i = start; i < std::min(data.size(), start + chunk); ++i) rows.push_back(i);
    const auto fwd = forward(params, detail::gather_batch(data, rows), false, unused);
    const auto p = argmax_rows(fwd.probs);
    preds.insert(preds.end(), p.begin(), p.end());
  }
  return preds;
}

inline EvalReport evaluate(const ModelParams<float>& params, const SequenceSet& data) {
  const auto preds = predict(params, data);
  return evaluate_predictions(data.labels, preds, params.config.num_classes);
}

/// Sequential pretraining over band subsets. Stage 0 starts from `init`;
/// stage i starts from the weights stage i-1 ended with. Each stage trains on
/// the training split of its band subset with seed derive_seed(cfg.seed, {i})
/// and a fresh optimizer. Returns one checkpoint per stage.
inline std::vector<Checkpoint> pretrain_curriculum(const ModelParams<float>& init, const AugmentedCorpus& corpus,
                                                   const std::vector<std::string>& order, const SplitPlan& split,
                                                   std::size_t epochs_per_stage, const TrainConfig& cfg,
                                                   PrepareOptions prep = {}) {
  if (order.empty()) throw ConfigError("pretrain_curriculum: no stages requested");
  for (const auto& band : order)
    if (!corpus.subsets.contains(band)) throw ConfigError("pretrain_curriculum: corpus has no '" + band + "' subset");

  std::vector<Checkpoint> out;
  Checkpoint current{init, {}};
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto data = prepare_sequences(corpus.subset(order[i]), split.train, init.config, prep);
    TrainConfig stage = cfg;
    stage.epochs = epochs_per_stage;
    stage.seed = derive_seed(cfg.seed, {i});
    train(current.params, data, stage);
    current.provenance.push_back({order[i], epochs_per_stage, stage.seed, hex64(data.data_hash)});
    out.push_back(current);
  }
  return out;
}

/// Pretraining on the union of several band subsets (alternative to the
/// sequential curriculum). One stage; provenance subset reads "theta+alpha+...".
inline Checkpoint pretrain_pooled(const ModelParams<float>& init, const AugmentedCorpus& corpus,
                                  const std::vector<std::string>& bands, const SplitPlan& split, std::size_t epochs,
                                  const TrainConfig& cfg, PrepareOptions prep = {}) {
  if (bands.empty()) throw ConfigError("pretrain_pooled: no bands requested");
  std::vector<Trial> pooled;
  std::vector<std::size_t> rows;
  std::string tag;
  for (const auto& band : bands) {
    const auto& subset = corpus.subset(band);
    for (auto i : split.train) {
      rows.push_back(pooled.size());
      pooled.push_back(subset.at(i));
    }
    tag += (tag.empty() ? "" : "+") + band;
  }
  const auto data = prepare_sequences(pooled, rows, init.config, prep);
  Checkpoint ckpt{init, {}};
  TrainConfig stage = cfg;
  stage.epochs = epochs;
  stage.seed = derive_seed(cfg.seed, {0});
  train(ckpt.params, data, stage);
  ckpt.provenance.push_back({tag, epochs, stage.seed, hex64(data.data_hash)});
  return ckpt;
}

/// Continues training from a checkpoint's weights on the original training
/// split with a fresh optimizer, and appends the stage to the provenance.
inline Checkpoint finetune(const Checkpoint& start, const ModelConfig& expected, const SequenceSet& original_train,
                           std::size_t epochs, const TrainConfig& cfg) {
  if (start.config() != expected)
    throw CheckpointMismatch("finetune: checkpoint model config " + nlohmann::json(start.config()).dump() +
                             " differs from " + nlohmann::json(expected).dump());
  Checkpoint out = start;
  TrainConfig stage = cfg;
  stage.epochs = epochs;
  train(out.params, original_train, stage);
  out.provenance.push_back({"raw", epochs, cfg.seed, hex64(original_train.data_hash)});
  return out;
}

// ------------------------------------------------------------ comparison protocol

struct ProtocolConfig {
  std::size_t baseline_epochs = 100;
  std::size_t pretrain_epochs = 20;
  std::size_t finetune_epochs = 50;
  bool mixed_pool = false;  // last row: pooled theta+alpha+beta instead of the sequential curriculum
};

struct Table2Row {
  std::string label;
  std::vector<std::string> pretrain;  // band subsets used before fine-tuning
  double reference_f1 = 0.0;
  EvalReport report;
  std::vector<StageRecord> provenance;
};

struct Table2Report {
  std::uint64_t seed = 0;
  ModelConfig model;
  TrainConfig train;
  ProtocolConfig protocol;
  std::size_t train_trials = 0;
  std::size_t test_trials = 0;
  std::vector<Table2Row> rows;
};

/// Five rows: from-scratch baseline; theta, alpha, beta single-band
/// pretraining followed by fine-tuning; theta -> alpha -> beta curriculum
/// followed by fine-tuning. All rows share the same initial weights and are
/// scored on the held-out test split of the original data.
inline Table2Report run_table2_protocol(const std::vector<Trial>& original, const AugmentedCorpus& corpus,
                                        const SplitPlan& split, const ModelConfig& model, const TrainConfig& cfg,
                                        const ProtocolConfig& proto, PrepareOptions prep = {}) {
  cfg.validate();
  for (const char* band : {"theta", "alpha", "beta"})
    if (!corpus.subsets.contains(band)) throw ConfigError(std::string("table2: corpus has no '") + band + "' subset");

  Table2Report report;
  report.seed = cfg.seed;
  report.model = model;
  report.train = cfg;
  report.protocol = proto;

  Rng init_rng(derive_seed(cfg.seed, {0x1a17u}));
  const auto init = init_params<float>(model, init_rng);
  const auto raw_train = prepare_sequences(original, split.train, model, prep);
  const auto raw_test = prepare_sequences(original, split.test, model, prep);
  report.train_trials = raw_train.size();
  report.test_trials = raw_test.size();

  {
    Table2Row row{"Original", {}, 0.63, {}, {}};
    ModelParams<float> params = init;
    TrainConfig base = cfg;
    base.epochs = proto.baseline_epochs;
    train(params, raw_train, base);
    row.report = evaluate(params, raw_test);
    row.provenance.push_back({"raw", proto.baseline_epochs, cfg.seed, hex64(raw_train.data_hash)});
    report.rows.push_back(std::move(row));
  }

  const std::vector<std::string> full{"theta", "alpha", "beta"};
  std::vector<Checkpoint> chain;
  if (!proto.mixed_pool) chain = pretrain_curriculum(init, corpus, full, split, proto.pretrain_epochs, cfg, prep);

  struct Single {
    std::string band, label;
    double reference;
  };
  const std::vector<Single> singles{
      {"theta", "Original+Theta", 0.78}, {"alpha", "Original+Alpha", 0.71}, {"beta", "Original+Beta", 0.69}};
  for (const auto& [band, label, reference] : singles) {
    // The first curriculum stage is the theta-only pretraining run.
    Checkpoint pre = (band == full.front() && !chain.empty())
                         ? chain.front()
                         : pretrain_curriculum(init, corpus, {band}, split, proto.pretrain_epochs, cfg, prep).back();
    auto tuned = finetune(pre, model, raw_train, proto.finetune_epochs, cfg);
    Table2Row row{label, {band}, reference, {}, {}};
    row.report = evaluate(tuned.params, raw_test);
    row.provenance = tuned.provenance;
    report.rows.push_back(std::move(row));
  }

  {
    const Checkpoint pre =
        proto.mixed_pool ? pretrain_pooled(init, corpus, full, split, proto.pretrain_epochs, cfg, prep) : chain.back();
    auto tuned = finetune(pre, model, raw_train, proto.finetune_epochs, cfg);
    Table2Row row{"Original+Theta+Alpha+Beta", full, 0.73, {}, {}};
    row.report = evaluate(tuned.params, raw_test);
    row.provenance = tuned.provenance;
    report.rows.push_back(std::move(row));
  }
  return report;
}

inline nlohmann::json to_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.adam.learning_rate},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"epsilon", c.adam.epsilon},
          {"seed", c.seed},
          {"shuffle", c.shuffle}};
}

inline nlohmann::json to_json(const ProtocolConfig& p) {
  return {{"baseline_epochs", p.baseline_epochs},
          {"pretrain_epochs", p.pretrain_epochs},
          {"finetune_epochs", p.finetune_epochs},
          {"mixed_pool", p.mixed_pool}};
}

inline nlohmann::json to_json(const Table2Report& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    nlohmann::json per = nlohmann::json::array();
    for (const auto& s : row.report.per_class) per.push_back(round4(s.f1));
    rows.push_back({{"label", row.label},
                    {"pretrain", row.pretrain},
                    {"weighted_f1", round4(row.report.weighted_f1)},
                    {"per_class_f1", per},
                    {"reference_f1", row.reference_f1},
                    {"eval", to_json(row.report)},
                    {"provenance", row.provenance}});
  }
  return {{"format", "eegnet-table2"},
          {"version", 1},
          {"seed", r.seed},
          {"model", r.model},
          {"train", to_json(r.train)},
          {"protocol", to_json(r.protocol)},
          {"train_trials", r.train_trials},
          {"test_trials", r.test_trials},
          {"rows", rows},
          {"note", "reference_f1 values are published results on a private EEG dataset, listed for comparison only"}};
}

inline std::string format_table2(const Table2Report& r) {
  std::string out;
  char buf[256];
  std::snprintf(buf, sizeof buf, "%-28s %10s %26s %9s\n", "row", "weighted", "per-class F1 (L/H/R)", "reference");
  out += buf;
  for (const auto& row : r.rows) {
    std::string per;
    for (const auto& s : row.report.per_class) {
      std::snprintf(buf, sizeof buf, "%s%.4f", per.empty() ? "" : " ", s.f1);
      per += buf;
    }
    std::snprintf(buf, sizeof buf, "%-28s %10.4f %26s %9.2f\n", row.label.c_str(), row.report.weighted_f1, per.c_str(),
                  row.reference_f1);
    out += buf;
  }
  return out;
}

}  // namespace eegnet
