#include <gtest/gtest.h>

#include <cmath>

#include "eegnet/model.hpp"

using namespace eegnet;

namespace {

ModelConfig single_lstm(std::size_t d, std::size_t h) {
  ModelConfig c;
  c.input_features = d;
  c.sequence_length = 4;
  c.lstm_sizes = {h};
  c.return_sequences = {false};
  c.dense_hidden = 2;
  c.num_classes = 3;
  return c;
}

}  // namespace

TEST(ParamCount, LayerFormulas) {
  EXPECT_EQ(lstm_param_count(1, 1), 12u);
  EXPECT_EQ(dense_param_count(16, 64), 1088u);
  EXPECT_EQ(dense_param_count(64, 3), 195u);
}

TEST(ParamCount, DefaultConfigBreakdown) {
  const auto rows = param_breakdown(ModelConfig{});
  ASSERT_EQ(rows.size(), 7u);
  const std::size_t expected[] = {294912, 197120, 49408, 12416, 3136, 1088, 195};
  std::size_t total = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    EXPECT_EQ(rows[i].params, expected[i]) << rows[i].name;
    total += rows[i].params;
  }
  EXPECT_EQ(total, 558275u);
  EXPECT_EQ(param_count(ModelConfig{}), 558275u);
  EXPECT_NE(param_count(ModelConfig{}), kReportedParamCount);
}

TEST(ParamCount, MatchesAllocatedScalarsForRandomConfigs) {
  Rng rng(42);
  for (int trial = 0; trial < 200; ++trial) {
    ModelConfig c;
    c.input_features = 1 + rng.below(40);
    c.sequence_length = 1 + rng.below(8);
    const std::size_t layers = 1 + rng.below(5);
    c.lstm_sizes.clear();
    for (std::size_t l = 0; l < layers; ++l) c.lstm_sizes.push_back(1 + rng.below(20));
    c.return_sequences.assign(layers, true);
    c.return_sequences.back() = false;
    c.dense_hidden = 1 + rng.below(30);
    c.num_classes = 2 + rng.below(5);
    ModelParams<float> p(c);
    EXPECT_EQ(p.scalar_count(), param_count(c));
  }
}

TEST(ModelConfig, RejectsInvalid) {
  ModelConfig c;
  c.return_sequences.back() = true;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.return_sequences.pop_back();
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.dropout_rate = 1.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c = ModelConfig{};
  c.return_sequences[1] = false;
  EXPECT_THROW(c.validate(), ConfigError);
}

TEST(ModelConfig, JsonRejectsUnknownKeys) {
  nlohmann::json j = ModelConfig{};
  EXPECT_EQ(j.get<ModelConfig>(), ModelConfig{});
  j["hidden_units"] = 5;
  EXPECT_THROW(j.get<ModelConfig>(), ConfigError);
}

TEST(InitParams, ForgetBiasIsOneOtherBiasesZero) {
  Rng rng(1);
  const auto p = init_params<float>(single_lstm(1, 1), rng);
  ASSERT_EQ(p.lstm[0].bias.size(), 4u);
  EXPECT_EQ(p.lstm[0].bias[kInputGate], 0.0f);
  EXPECT_EQ(p.lstm[0].bias[kForgetGate], 1.0f);
  EXPECT_EQ(p.lstm[0].bias[kCellGate], 0.0f);
  EXPECT_EQ(p.lstm[0].bias[kOutputGate], 0.0f);
  for (float b : p.hidden.bias.data) EXPECT_EQ(b, 0.0f);
  for (float b : p.output.bias.data) EXPECT_EQ(b, 0.0f);
}

TEST(InitParams, DeterministicPerSeed) {
  ModelConfig c;
  c.lstm_sizes = {8, 4};
  c.return_sequences = {true, false};
  Rng a(7), b(7), other(8);
  const auto pa = init_params<float>(c, a);
  const auto pb = init_params<float>(c, b);
  const auto pc = init_params<float>(c, other);
  EXPECT_TRUE(pa == pb);
  EXPECT_FALSE(pa == pc);
}

TEST(InitParams, GlorotBounds) {
  EXPECT_DOUBLE_EQ(glorot_bound(16, 64), std::sqrt(6.0 / 80.0));
  ModelConfig c;
  c.input_features = 5;
  c.lstm_sizes = {16};
  c.return_sequences = {false};
  c.dense_hidden = 64;
  Rng rng(3);
  const auto p = init_params<float>(c, rng);
  const double dense_bound = glorot_bound(16, 64);
  double max_abs = 0.0;
  for (float w : p.hidden.weights.data) max_abs = std::max(max_abs, std::abs(static_cast<double>(w)));
  EXPECT_LE(max_abs, dense_bound);
  EXPECT_GT(max_abs, 0.8 * dense_bound);
  for (float w : p.lstm[0].w_recurrent.data) EXPECT_LE(std::abs(w), glorot_bound(16, 64) + 1e-7);
  for (float w : p.lstm[0].w_input.data) EXPECT_LE(std::abs(w), glorot_bound(5, 64) + 1e-7);
}
