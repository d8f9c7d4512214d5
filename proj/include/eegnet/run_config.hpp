#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eegnet/dsp.hpp"
#include "eegnet/error.hpp"
#include "eegnet/io.hpp"
#include "eegnet/model.hpp"
#include "eegnet/train.hpp"

namespace eegnet {

/// Settings shared by every command-line entry point. Loaded from a JSON file
/// (all sections optional, unknown keys rejected) and then overridden by
/// flags. The effective value is written next to every command's output.
struct RunConfig {
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  ModelConfig model;
  TrainConfig train{100, 32, {}, 0, true, false};
  ProtocolConfig protocol;
  std::vector<BandSpec> bands = default_bands();
  int filter_order = kDefaultFilterOrder;
  double split_ratio = 0.6;
  bool grouped_split = false;
  Normalization normalization = Normalization::PerChannel;

  PrepareOptions prepare() const { return {normalization}; }

  void validate() const {
    model.validate();
    train.validate();
    if (threads == 0) throw ConfigError("config: threads must be at least 1");
    if (filter_order < 2 || filter_order % 2 != 0) throw ConfigError("config: filter_order must be even and >= 2");
    if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("config: split ratio must lie in (0, 1)");
    if (bands.empty()) throw ConfigError("config: at least one band is required");
    if (protocol.baseline_epochs == 0 || protocol.pretrain_epochs == 0 || protocol.finetune_epochs == 0)
      throw ConfigError("config: protocol epoch budgets must be positive");
  }

  // Seed-dependent copy of the training settings.
  TrainConfig train_config() const {
    TrainConfig t = train;
    t.seed = seed;
    return t;
  }
};

namespace detail {

inline void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known,
                           const std::string& section) {
  if (!j.is_object()) throw ConfigError("config: section '" + section + "' must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (const char* k : known) ok = ok || it.key() == k;
    if (!ok) throw ConfigError("config: unknown key '" + (section.empty() ? "" : section + ".") + it.key() + "'");
  }
}

}  // namespace detail

inline nlohmann::json to_json(const RunConfig& c) {
  nlohmann::json bands = nlohmann::json::array();
  for (const auto& b : c.bands) bands.push_back({{"name", b.name}, {"low_hz", b.low_hz}, {"high_hz", b.high_hz}});
  auto train = to_json(c.train);
  train.erase("seed");
  return {{"seed", c.seed},
          {"threads", c.threads},
          {"model", c.model},
          {"train", train},
          {"protocol", to_json(c.protocol)},
          {"bands", bands},
          {"filter_order", c.filter_order},
          {"split", {{"ratio", c.split_ratio}, {"grouped", c.grouped_split}}},
          {"normalization", to_string(c.normalization)}};
}

inline RunConfig run_config_from_json(const nlohmann::json& j) {
  detail::reject_unknown(j, {"seed", "threads", "model", "train", "protocol", "bands", "filter_order", "split", "normalization"},
                         "");
  RunConfig c;
  try {
    c.seed = j.value("seed", c.seed);
    c.threads = j.value("threads", c.threads);
    if (j.contains("model")) c.model = j.at("model").get<ModelConfig>();
    if (j.contains("train")) {
      const auto& t = j.at("train");
      detail::reject_unknown(t, {"epochs", "batch_size", "learning_rate", "beta1", "beta2", "epsilon", "shuffle"},
                             "train");
      c.train.epochs = t.value("epochs", c.train.epochs);
      c.train.batch_size = t.value("batch_size", c.train.batch_size);
      c.train.adam.learning_rate = t.value("learning_rate", c.train.adam.learning_rate);
      c.train.adam.beta1 = t.value("beta1", c.train.adam.beta1);
      c.train.adam.beta2 = t.value("beta2", c.train.adam.beta2);
      c.train.adam.epsilon = t.value("epsilon", c.train.adam.epsilon);
      c.train.shuffle = t.value("shuffle", c.train.shuffle);
    }
    if (j.contains("protocol")) {
      const auto& p = j.at("protocol");
      detail::reject_unknown(p, {"baseline_epochs", "pretrain_epochs", "finetune_epochs", "mixed_pool"}, "protocol");
      c.protocol.baseline_epochs = p.value("baseline_epochs", c.protocol.baseline_epochs);
      c.protocol.pretrain_epochs = p.value("pretrain_epochs", c.protocol.pretrain_epochs);
      c.protocol.finetune_epochs = p.value("finetune_epochs", c.protocol.finetune_epochs);
      c.protocol.mixed_pool = p.value("mixed_pool", c.protocol.mixed_pool);
    }
    if (j.contains("bands")) {
      c.bands.clear();
      for (const auto& b : j.at("bands")) {
        detail::reject_unknown(b, {"name", "low_hz", "high_hz"}, "bands[]");
        c.bands.push_back({b.at("name").get<std::string>(), b.at("low_hz").get<double>(), b.at("high_hz").get<double>()});
      }
    }
    c.filter_order = j.value("filter_order", c.filter_order);
    if (j.contains("split")) {
      const auto& s = j.at("split");
      detail::reject_unknown(s, {"ratio", "grouped"}, "split");
      c.split_ratio = s.value("ratio", c.split_ratio);
      c.grouped_split = s.value("grouped", c.grouped_split);
    }
    if (j.contains("normalization")) c.normalization = normalization_from_string(j.at("normalization").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& file) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(detail::read_text(file));
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(file.string() + ": " + e.what());
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }
  return run_config_from_json(j);
}

}  // namespace eegnet
