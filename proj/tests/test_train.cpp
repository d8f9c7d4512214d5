#include <gtest/gtest.h>

#include <algorithm>
#include <set>

#include "eegnet/eegnet.hpp"

using namespace eegnet;

namespace {

ModelConfig tiny_model() {
  ModelConfig m;
  m.sequence_length = 16;
  m.lstm_sizes = {6, 5, 4, 4, 3};
  m.dense_hidden = 6;
  return m;
}

struct TinyWorld {
  SynthDataset ds;
  SplitPlan split;
  AugmentedCorpus corpus;
};

const TinyWorld& tiny_world() {
  static const TinyWorld w = [] {
    auto spec = default_benchmark_spec();
    spec.n_per_class = {6, 6, 6};
    spec.n_participants = 3;
    spec.seed = 21;
    TinyWorld out;
    out.ds = generate_trials(spec);
    out.split = split_train_test(out.ds.manifest, 0.6, 21);
    out.corpus = build_corpus(out.ds.trials, default_bands(), spec.fs);
    return out;
  }();
  return w;
}

TrainConfig quick(std::size_t epochs, std::uint64_t seed = 3) {
  TrainConfig c;
  c.epochs = epochs;
  c.batch_size = 4;
  c.seed = seed;
  return c;
}

ModelParams<float> fresh(const ModelConfig& m, std::uint64_t seed = 1) {
  Rng rng(seed);
  return init_params<float>(m, rng);
}

std::vector<std::vector<float>> flatten(ModelParams<float> p) {
  std::vector<std::vector<float>> out;
  p.for_each_tensor([&](const std::string&, Tensor<float>& t) { out.push_back(t.values()); });
  return out;
}

}  // namespace

TEST(Train, ZeroEpochsRejected) {
  const auto& w = tiny_world();
  auto params = fresh(tiny_model());
  const auto data = prepare_sequences(w.ds.trials, w.split.train, tiny_model());
  EXPECT_THROW(train(params, data, quick(0)), ConfigError);
  auto bad = quick(1);
  bad.batch_size = 0;
  EXPECT_THROW(train(params, data, bad), ConfigError);
}

TEST(Train, SameSeedSameLossSequence) {
  const auto& w = tiny_world();
  const auto data = prepare_sequences(w.ds.trials, w.split.train, tiny_model());
  auto a = fresh(tiny_model()), b = fresh(tiny_model()), c = fresh(tiny_model());
  const auto ha = train(a, data, quick(4));
  const auto hb = train(b, data, quick(4));
  const auto hc = train(c, data, quick(4, 99));
  EXPECT_EQ(ha.loss, hb.loss);
  EXPECT_EQ(flatten(a), flatten(b));
  EXPECT_NE(ha.loss, hc.loss);
  EXPECT_EQ(ha.loss.size(), 4u);
  EXPECT_EQ(ha.accuracy.size(), 4u);
  EXPECT_EQ(ha.seconds.size(), 4u);
}

TEST(Train, StepCountAndPerEpochShuffle) {
  const auto& w = tiny_world();
  const auto data = prepare_sequences(w.ds.trials, w.split.train, tiny_model());
  auto cfg = quick(3);
  cfg.audit = true;
  auto p = fresh(tiny_model());
  const auto h = train(p, data, cfg);
  const std::size_t per_epoch = (data.size() + cfg.batch_size - 1) / cfg.batch_size;
  ASSERT_EQ(h.batch_audit.size(), 3 * per_epoch);
  auto epoch_keys = [&](std::size_t e) {
    std::vector<std::uint64_t> keys;
    for (std::size_t b = 0; b < per_epoch; ++b)
      keys.insert(keys.end(), h.batch_audit[e * per_epoch + b].begin(), h.batch_audit[e * per_epoch + b].end());
    return keys;
  };
  const auto e0 = epoch_keys(0), e1 = epoch_keys(1);
  EXPECT_NE(e0, e1);
  EXPECT_TRUE(std::is_permutation(e0.begin(), e0.end(), data.keys.begin()));

  cfg.shuffle = false;
  auto q = fresh(tiny_model());
  const auto hs = train(q, data, cfg);
  std::vector<std::uint64_t> seq;
  for (std::size_t b = 0; b < per_epoch; ++b) seq.insert(seq.end(), hs.batch_audit[b].begin(), hs.batch_audit[b].end());
  EXPECT_EQ(seq, data.keys);
}

TEST(Train, NanReportsEpochAndBatch) {
  const auto& w = tiny_world();
  auto data = prepare_sequences(w.ds.trials, w.split.train, tiny_model());
  auto params = fresh(tiny_model());
  params.lstm[0].w_input[0] = std::numeric_limits<float>::quiet_NaN();
  try {
    train(params, data, quick(2));
    FAIL();
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1, batch 1"), std::string::npos) << e.what();
  }
}

TEST(Curriculum, SingleStageProvenance) {
  const auto& w = tiny_world();
  const auto init = fresh(tiny_model());
  const auto stages = pretrain_curriculum(init, w.corpus, {"theta"}, w.split, 20, quick(1));
  ASSERT_EQ(stages.size(), 1u);
  ASSERT_EQ(stages[0].provenance.size(), 1u);
  EXPECT_EQ(stages[0].provenance[0].subset, "theta");
  EXPECT_EQ(stages[0].provenance[0].epochs, 20u);
}

TEST(Curriculum, ThreeStagesChainBitExact) {
  const auto& w = tiny_world();
  const auto model = tiny_model();
  const auto init = fresh(model);
  const std::vector<std::string> order{"theta", "alpha", "beta"};
  const auto cfg = quick(1, 5);
  const auto stages = pretrain_curriculum(init, w.corpus, order, w.split, 2, cfg);
  ASSERT_EQ(stages.size(), 3u);
  EXPECT_EQ(stages[2].provenance.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(stages[2].provenance[i].subset, order[i]);

  // Replaying stage i from stage i-1's weights reproduces it exactly.
  for (std::size_t i = 0; i < 3; ++i) {
    auto params = i == 0 ? init : stages[i - 1].params;
    auto stage = cfg;
    stage.epochs = 2;
    stage.seed = derive_seed(cfg.seed, {i});
    train(params, prepare_sequences(w.corpus.subset(order[i]), w.split.train, model), stage);
    EXPECT_EQ(flatten(params), flatten(stages[i].params)) << "stage " << i;
  }
}

TEST(Curriculum, EmptyOrderAndMissingBandRejected) {
  const auto& w = tiny_world();
  const auto init = fresh(tiny_model());
  EXPECT_THROW(pretrain_curriculum(init, w.corpus, {}, w.split, 1, quick(1)), ConfigError);
  EXPECT_THROW(pretrain_curriculum(init, w.corpus, {"gamma"}, w.split, 1, quick(1)), ConfigError);
}

TEST(Curriculum, PooledVariantProvenance) {
  const auto& w = tiny_world();
  const auto ckpt = pretrain_pooled(fresh(tiny_model()), w.corpus, {"theta", "alpha", "beta"}, w.split, 1, quick(1));
  ASSERT_EQ(ckpt.provenance.size(), 1u);
  EXPECT_EQ(ckpt.provenance[0].subset, "theta+alpha+beta");
}

TEST(Finetune, FromFreshInitEqualsPlainTraining) {
  const auto& w = tiny_world();
  const auto model = tiny_model();
  const auto data = prepare_sequences(w.ds.trials, w.split.train, model);
  auto plain = fresh(model);
  train(plain, data, quick(50));
  const auto tuned = finetune(Checkpoint{fresh(model), {}}, model, data, 50, quick(1));
  EXPECT_EQ(flatten(tuned.params), flatten(plain));
  ASSERT_EQ(tuned.provenance.size(), 1u);
  EXPECT_EQ(tuned.provenance.back().subset, "raw");
  EXPECT_EQ(tuned.provenance.back().epochs, 50u);
}

TEST(Finetune, AppendsToProvenance) {
  const auto& w = tiny_world();
  const auto model = tiny_model();
  const auto pre = pretrain_curriculum(fresh(model), w.corpus, {"theta"}, w.split, 1, quick(1)).back();
  const auto tuned = finetune(pre, model, prepare_sequences(w.ds.trials, w.split.train, model), 2, quick(1));
  ASSERT_EQ(tuned.provenance.size(), 2u);
  EXPECT_EQ(tuned.provenance[0], pre.provenance[0]);
  EXPECT_EQ(tuned.provenance[1].subset, "raw");
}

TEST(Finetune, ConfigMismatchRefused) {
  const auto& w = tiny_world();
  const auto model = tiny_model();
  auto other = model;
  other.lstm_sizes[0] = 7;
  const auto data = prepare_sequences(w.ds.trials, w.split.train, model);
  EXPECT_THROW(finetune(Checkpoint{fresh(other), {}}, model, data, 1, quick(1)), CheckpointMismatch);
}

TEST(Leakage, TestRecordingsNeverInTrainingBatches) {
  const auto& w = tiny_world();
  const auto model = tiny_model();
  const auto test = prepare_sequences(w.ds.trials, w.split.test, model);
  const std::set<std::uint64_t> test_keys(test.keys.begin(), test.keys.end());
  auto cfg = quick(2);
  cfg.audit = true;
  std::vector<SequenceSet> sets{prepare_sequences(w.ds.trials, w.split.train, model)};
  for (const auto& band : w.corpus.band_order) sets.push_back(prepare_sequences(w.corpus.subset(band), w.split.train, model));
  for (const auto& s : sets) {
    auto p = fresh(model);
    const auto h = train(p, s, cfg);
    for (const auto& batch : h.batch_audit)
      for (auto k : batch) EXPECT_FALSE(test_keys.contains(k)) << s.subset;
  }
}

TEST(Table2, FiveRowsWithReferenceValuesAndReplay) {
  const auto& w = tiny_world();
  ProtocolConfig proto{2, 1, 1, false};
  const auto a = run_table2_protocol(w.ds.trials, w.corpus, w.split, tiny_model(), quick(1), proto);
  const auto b = run_table2_protocol(w.ds.trials, w.corpus, w.split, tiny_model(), quick(1), proto);
  ASSERT_EQ(a.rows.size(), 5u);
  const std::vector<std::string> labels{"Original", "Original+Theta", "Original+Alpha", "Original+Beta",
                                        "Original+Theta+Alpha+Beta"};
  const std::vector<double> refs{0.63, 0.78, 0.71, 0.69, 0.73};
  for (std::size_t i = 0; i < 5; ++i) {
    EXPECT_EQ(a.rows[i].label, labels[i]);
    EXPECT_EQ(a.rows[i].reference_f1, refs[i]);
  }
  EXPECT_EQ(a.rows[4].provenance.size(), 4u);
  EXPECT_EQ(to_json(a).dump(), to_json(b).dump());
}

TEST(Table2, MissingBandRejected) {
  const auto& w = tiny_world();
  const auto partial = build_corpus(w.ds.trials, {kTheta, kAlpha}, 250.0);
  EXPECT_THROW(run_table2_protocol(w.ds.trials, partial, w.split, tiny_model(), quick(1), {}), ConfigError);
}
