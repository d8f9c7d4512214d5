#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "eegnet/adam.hpp"

using namespace eegnet;

TEST(Adam, ZeroGradientLeavesParamsAndAdvancesStep) {
  ModelConfig c;
  c.input_features = 2;
  c.sequence_length = 3;
  c.lstm_sizes = {3, 2};
  c.return_sequences = {true, false};
  c.dense_hidden = 4;
  Rng rng(1);
  auto p = init_params<float>(c, rng);
  const auto before = p;
  OptimizerState<float> st(p, {});
  adam_step(p, p.zeros_like(), st);
  EXPECT_TRUE(p == before);
  EXPECT_EQ(st.step, 1u);
}

TEST(Adam, FirstStepMovesByLearningRate) {
  std::vector<double> w{0.5}, g{1.0}, m{0.0}, v{0.0};
  AdamConfig h;
  adam_update<double>(w, g, m, v, 1, h);
  EXPECT_NEAR(0.5 - w[0], h.learning_rate / (1.0 + h.epsilon), 1e-9);
}

TEST(Adam, QuadraticDecreasesMonotonically) {
  std::vector<double> w{1.0}, g{0.0}, m{0.0}, v{0.0};
  AdamConfig h;
  h.learning_rate = 0.1;
  double prev = std::abs(w[0]);
  for (std::uint64_t t = 1; t <= 10; ++t) {
    g[0] = 2.0 * w[0];
    adam_update<double>(w, g, m, v, t, h);
    EXPECT_LT(std::abs(w[0]), prev) << "step " << t;
    prev = std::abs(w[0]);
  }
}

TEST(Adam, ShapeMismatchRejected) {
  ModelConfig a;
  a.lstm_sizes = {4};
  a.return_sequences = {false};
  a.input_features = 2;
  a.sequence_length = 2;
  ModelConfig b = a;
  b.lstm_sizes = {5};
  ModelParams<float> pa(a), pb(b);
  OptimizerState<float> st(pa, {});
  EXPECT_THROW(adam_step(pa, pb, st), ConfigError);
}
