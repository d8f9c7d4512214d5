#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>

#include "eegnet/eegnet.hpp"

using namespace eegnet;

namespace {

struct World {
  SynthDataset ds;
  SplitPlan split;
  AugmentedCorpus corpus;
  SequenceSet train, test;
  ModelParams<float> init;
  TrainConfig cfg;
};

World make_world(const SynthSpec& spec, bool with_corpus = true) {
  const auto model = benchmark_model_config();
  World w;
  w.ds = generate_trials(spec);
  w.split = split_train_test(w.ds.manifest, 0.6, spec.seed);
  if (with_corpus) w.corpus = build_corpus(w.ds.trials, default_bands(), spec.fs);
  w.train = prepare_sequences(w.ds.trials, w.split.train, model, benchmark_prepare_options());
  w.test = prepare_sequences(w.ds.trials, w.split.test, model, benchmark_prepare_options());
  w.cfg = benchmark_train_config(spec.seed);
  Rng rng(derive_seed(spec.seed, {0x1a17u}));
  w.init = init_params<float>(model, rng);
  return w;
}

double median3(std::array<double, 3> v) {
  std::sort(v.begin(), v.end());
  return v[1];
}

// Multinomial logistic regression on the flattened model inputs, fitted by
// full-batch gradient descent with a small L2 penalty.
std::vector<int> linear_predictions(const SequenceSet& train, const SequenceSet& test) {
  using Mat = Eigen::MatrixXd;
  const auto features = [](const SequenceSet& s) {
    const Eigen::Index n = static_cast<Eigen::Index>(s.size());
    const Eigen::Index d = static_cast<Eigen::Index>(s.inputs.size() / s.size());
    Mat x(n, d + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < d; ++j) x(i, j) = s.inputs.ptr()[i * d + j];
      x(i, d) = 1.0;
    }
    return x;
  };
  const Mat x = features(train), xt = features(test);
  Mat y = Mat::Zero(x.rows(), 3);
  for (Eigen::Index i = 0; i < x.rows(); ++i) y(i, train.labels[static_cast<std::size_t>(i)]) = 1.0;

  Mat w = Mat::Zero(x.cols(), 3);
  const double lr = 0.5 / static_cast<double>(x.cols()), l2 = 1e-4;
  const auto softmax = [](Mat z) {
    for (Eigen::Index i = 0; i < z.rows(); ++i) {
      z.row(i).array() -= z.row(i).maxCoeff();
      z.row(i) = z.row(i).array().exp().matrix();
      z.row(i) /= z.row(i).sum();
    }
    return z;
  };
  for (int it = 0; it < 500; ++it) {
    const Mat p = softmax(x * w);
    w -= lr * (x.transpose() * (p - y) / static_cast<double>(x.rows()) + l2 * w);
  }
  const Mat pt = xt * w;
  std::vector<int> out;
  for (Eigen::Index i = 0; i < pt.rows(); ++i) {
    Eigen::Index k;
    pt.row(i).maxCoeff(&k);
    out.push_back(static_cast<int>(k));
  }
  return out;
}

}  // namespace

TEST(Benchmark, LinearBaselineStaysBelowTarget) {
  const auto w = make_world(benchmark_spec(1), false);
  const auto preds = linear_predictions(w.train, w.test);
  const auto report = evaluate_predictions(w.test.labels, preds);
  EXPECT_LT(report.weighted_f1, 0.9);
}

TEST(Benchmark, ZeroAmplitudeControlIsNearChance) {
  auto spec = benchmark_spec(1);
  for (auto& sigs : spec.signatures)
    for (auto& s : sigs) s.amplitude = 0.0;
  auto w = make_world(spec, false);
  auto params = w.init;
  train(params, w.train, w.cfg);
  EXPECT_LE(evaluate(params, w.test).weighted_f1, 0.45);
}

TEST(Benchmark, CurriculumReachesTargetWithinTenMinutes) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto w = make_world(benchmark_spec(1));
  const auto chain =
      pretrain_curriculum(w.init, w.corpus, {"theta", "alpha", "beta"}, w.split, 20, w.cfg, benchmark_prepare_options());
  const auto tuned = finetune(chain.back(), benchmark_model_config(), w.train, 50, w.cfg);
  const double f1 = evaluate(tuned.params, w.test).weighted_f1;
  const double minutes = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  EXPECT_GE(f1, 0.9);
  EXPECT_LT(minutes, 10.0);
}

TEST(Benchmark, ThetaPretrainingBeatsFiftyEpochBaseline) {
  std::array<double, 3> base{}, theta{};
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const auto w = make_world(benchmark_spec(seed));
    auto scratch = w.init;
    TrainConfig fifty = w.cfg;
    fifty.epochs = 50;
    train(scratch, w.train, fifty);
    base[seed - 1] = evaluate(scratch, w.test).weighted_f1;

    const auto pre = pretrain_curriculum(w.init, w.corpus, {"theta"}, w.split, 20, w.cfg, benchmark_prepare_options()).back();
    const auto tuned = finetune(pre, benchmark_model_config(), w.train, 50, w.cfg);
    theta[seed - 1] = evaluate(tuned.params, w.test).weighted_f1;
    std::printf("seed %llu: baseline %.4f, theta %.4f\n", static_cast<unsigned long long>(seed), base[seed - 1],
                theta[seed - 1]);
  }
  EXPECT_GE(median3(theta), median3(base));
}
