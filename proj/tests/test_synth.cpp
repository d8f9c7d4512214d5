#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "eegnet/synth.hpp"
#include "test_util.hpp"

using namespace eegnet;
using eegnet::testkit::TempDir;

namespace {

// Power at frequency f (Hz) of a real signal sampled at fs, by direct DFT.
double power_at(std::span<const float> x, double fs, double f) {
  std::complex<double> acc;
  for (std::size_t i = 0; i < x.size(); ++i)
    acc += static_cast<double>(x[i]) * std::polar(1.0, -2.0 * std::numbers::pi * f * i / fs);
  return std::norm(acc) / static_cast<double>(x.size());
}

double band_energy(std::span<const float> x, double fs, double lo, double hi) {
  double e = 0.0;
  const double df = fs / static_cast<double>(x.size());
  for (double f = df; f <= fs / 2; f += df)
    if (f >= lo && f <= hi) e += power_at(x, fs, f);
  return e;
}

SynthSpec single_tone_spec() {
  SynthSpec s;
  s.n_per_class = {2, 2, 2};
  s.n_participants = 2;
  s.pink_amplitude = 0.0;
  for (auto& sigs : s.signatures) sigs = {Signature{6.0, 1.0, std::vector<double>(kChannels, 1.0)}};
  return s;
}

}  // namespace

TEST(Synth, PureToneSpectrumPeaksAtSignatureFrequency) {
  const auto ds = generate_trials(single_tone_spec());
  for (const auto& t : ds.trials) {
    const double fs = t.fs;
    const double df = fs / static_cast<double>(t.samples());
    for (std::size_t c = 0; c < t.channels(); c += 6) {
      double best_f = 0.0, best_p = -1.0;
      for (std::size_t k = 1; k <= t.samples() / 2; ++k) {
        const double p = power_at(t.channel(c), fs, k * df);
        if (p > best_p) {
          best_p = p;
          best_f = k * df;
        }
      }
      EXPECT_NEAR(best_f, 6.0, df);
    }
  }
}

TEST(Synth, ManifestTalliesMatchOriginalTable) {
  SynthSpec s = default_benchmark_spec();
  s.n_per_class = {997, 2000, 1003};
  s.n_participants = 20;
  const auto m = synth_manifest(s);
  std::array<std::size_t, 3> n{};
  for (int l : m.labels()) ++n[l];
  EXPECT_EQ(n, (std::array<std::size_t, 3>{997, 2000, 1003}));
  EXPECT_EQ(m.rows.size(), 4000u);
  EXPECT_EQ(m.participants()[0], "P01");
  EXPECT_EQ(m.participants()[21], "P02");
}

TEST(Synth, SameSeedByteIdenticalFiles) {
  TempDir a("synth_a"), b("synth_b");
  auto spec = default_benchmark_spec();
  spec.n_per_class = {3, 3, 3};
  spec.seed = 77;
  generate(spec, a.path());
  generate(spec, b.path(), 4);
  for (const auto& entry : std::filesystem::directory_iterator(a.path())) {
    const auto name = entry.path().filename();
    EXPECT_EQ(detail::read_text(entry.path()), detail::read_text(b / name.string())) << name;
  }
  spec.seed = 78;
  TempDir c("synth_c");
  generate(spec, c.path());
  EXPECT_NE(detail::read_text(a / "trial_00001.csv"), detail::read_text(c / "trial_00001.csv"));
}

TEST(Synth, ShapeCompliance) {
  const auto spec = default_benchmark_spec();
  const auto ds = generate_trials(spec);
  ASSERT_EQ(ds.trials.size(), 180u);
  for (const auto& t : ds.trials) {
    EXPECT_EQ(t.channels(), 31u);
    EXPECT_GE(t.samples(), static_cast<std::size_t>(std::ceil(0.7 * spec.fs)));
    EXPECT_LE(t.samples(), static_cast<std::size_t>(std::floor(1.5 * spec.fs)));
  }
}

TEST(Synth, ParticipantsRoundRobin) {
  auto spec = default_benchmark_spec();
  const auto m = synth_manifest(spec);
  for (std::size_t i = 0; i < m.rows.size(); ++i) EXPECT_EQ(m.rows[i].participant_id, synth_participant_name(i % 10));
}

TEST(Synth, InvalidSpecsRejected) {
  auto spec = default_benchmark_spec();
  spec.n_per_class[1] = 0;
  EXPECT_THROW(synth_manifest(spec), ConfigError);
  spec = default_benchmark_spec();
  spec.n_participants = 0;
  EXPECT_THROW(synth_manifest(spec), ConfigError);
  spec = default_benchmark_spec();
  spec.signatures[0][0].amplitude = -1.0;
  EXPECT_THROW(synth_manifest(spec), ConfigError);
  spec = default_benchmark_spec();
  spec.signatures[2][1].spatial.pop_back();
  EXPECT_THROW(synth_manifest(spec), ConfigError);
}

TEST(Synth, SignatureEnergyNearDeclaredCenters) {
  auto spec = default_benchmark_spec();
  spec.pink_amplitude = 0.0;
  spec.min_duration_s = spec.max_duration_s = 1.5;
  spec.n_per_class = {4, 4, 4};
  const auto ds = generate_trials(spec);
  for (const auto& t : ds.trials) {
    const auto& sigs = spec.signatures[t.label_index()];
    for (std::size_t c = 0; c < t.channels(); c += 5) {
      const auto x = t.channel(c);
      double near = 0.0, total = 0.0;
      const double df = 0.1;
      for (double f = df; f < t.fs / 2; f += df) {
        const double p = power_at(x, t.fs, f);
        total += p;
        for (const auto& s : sigs)
          if (std::abs(f - s.freq_hz) <= 1.0) {
            near += p;
            break;
          }
      }
      EXPECT_GE(near / total, 0.7);
    }
  }
}

TEST(Synth, ThetaEnergySeparatesClasses) {
  const auto spec = default_benchmark_spec();
  const auto ds = generate_trials(spec);
  // Mean theta energy of each class on each class's peak channel.
  const std::array<std::size_t, 3> peak_channel{5, 15, 25};
  std::array<std::array<double, 3>, 3> energy{};
  std::array<std::size_t, 3> count{};
  for (const auto& t : ds.trials) {
    const auto cls = static_cast<std::size_t>(t.label_index());
    ++count[cls];
    for (std::size_t k = 0; k < 3; ++k) energy[cls][k] += band_energy(t.channel(peak_channel[k]), t.fs, 4.0, 8.0);
  }
  for (std::size_t k = 0; k < 3; ++k)
    for (std::size_t other = 0; other < 3; ++other) {
      if (other == k) continue;
      const double own = energy[k][k] / static_cast<double>(count[k]);
      const double theirs = energy[other][k] / static_cast<double>(count[other]);
      EXPECT_GE(own / theirs, 3.0) << "class " << k << " vs " << other;
    }
}
