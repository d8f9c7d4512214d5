#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "eegnet/dataset.hpp"
#include "eegnet/dsp.hpp"
#include "eegnet/error.hpp"
#include "eegnet/parallel.hpp"
#include "eegnet/rng.hpp"

namespace eegnet {

// A class-specific oscillation: amplitude * sin(2 pi f t + phase) on every
// channel, scaled by a per-channel weight. The phase is random per trial.
struct Signature {
  double freq_hz = 6.0;
  double amplitude = 1.0;
  std::vector<double> spatial;  // one weight per channel
};

struct SynthSpec {
  std::array<std::size_t, kNumClasses> n_per_class{60, 60, 60};
  std::size_t channels = kChannels;
  double fs = kDefaultSampleRate;
  double min_duration_s = 0.7;  // trial lengths are uniform in [0.7 fs, 1.5 fs] samples
  double max_duration_s = 1.5;
  std::array<std::vector<Signature>, kNumClasses> signatures;
  double pink_amplitude = 1.0;      // RMS of the 1/f background per channel
  double participant_jitter = 0.2;  // per-participant signal gain spread, gain in [1-j, 1+j]
  std::size_t n_participants = 10;
  std::uint64_t seed = 0;

  std::size_t min_samples() const { return static_cast<std::size_t>(std::ceil(min_duration_s * fs)); }
  std::size_t max_samples() const { return static_cast<std::size_t>(std::floor(max_duration_s * fs)); }

  void validate() const {
    for (auto n : n_per_class)
      if (n == 0) throw ConfigError("synth: every class needs at least one trial");
    if (n_participants == 0) throw ConfigError("synth: need at least one participant");
    if (channels != kChannels) throw ConfigError("synth: trials must have " + std::to_string(kChannels) + " channels");
    if (!(fs > 0.0) || min_samples() < 2 || min_samples() > max_samples())
      throw ConfigError("synth: invalid duration range");
    if (pink_amplitude < 0.0 || participant_jitter < 0.0 || participant_jitter >= 1.0)
      throw ConfigError("synth: noise amplitude and jitter must be non-negative (jitter < 1)");
    for (const auto& sigs : signatures)
      for (const auto& s : sigs) {
        if (s.amplitude < 0.0) throw ConfigError("synth: signature amplitudes must be non-negative");
        if (s.spatial.size() != channels) throw ConfigError("synth: spatial weights need one entry per channel");
        if (!(s.freq_hz > 0.0 && s.freq_hz < fs / 2.0)) throw ConfigError("synth: signature frequency out of range");
      }
  }
};

// Levels cycled through when assigning ambiguity values to a class.
inline const std::array<std::vector<double>, kNumClasses> kClassAmbiguities{
    std::vector<double>{0.15, 0.25}, std::vector<double>{0.4, 0.45, 0.55, 0.6}, std::vector<double>{0.75, 0.85}};

// Spatial weight bump over the channel index: floor + (1-floor) * gaussian.
inline std::vector<double> channel_bump(std::size_t channels, double center, double width, double floor) {
  std::vector<double> w(channels);
  for (std::size_t c = 0; c < channels; ++c) {
    const double d = (static_cast<double>(c) - center) / width;
    w[c] = floor + (1.0 - floor) * std::exp(-0.5 * d * d);
  }
  return w;
}

/// Benchmark used by the desk-scale experiments. Three classes separated by
/// theta oscillations (5, 6, 7 Hz, amplitude 0.8) with class-specific spatial
/// bumps 4 channels wide. Each class also carries half-amplitude echoes at
/// 10 Hz and 20 Hz whose bumps are broader (8 and 12 channels), so the alpha
/// and beta bands hold less class information than theta. Unit-RMS pink noise,
/// 60 trials per class, 10 participants, fs = 250 Hz.
inline SynthSpec default_benchmark_spec() {
  SynthSpec s;
  s.n_per_class = {60, 60, 60};
  s.n_participants = 10;
  s.fs = 250.0;
  s.pink_amplitude = 1.0;
  const double theta_amp = 0.8;
  const std::array<double, kNumClasses> theta_hz{5.0, 6.0, 7.0};
  const std::array<double, kNumClasses> centers{5.0, 15.0, 25.0};
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    s.signatures[c] = {Signature{theta_hz[c], theta_amp, channel_bump(s.channels, centers[c], 4.0, 0.15)},
                       Signature{10.0, 0.5 * theta_amp, channel_bump(s.channels, centers[c], 8.0, 0.15)},
                       Signature{20.0, 0.5 * theta_amp, channel_bump(s.channels, centers[c], 12.0, 0.15)}};
  }
  return s;
}

namespace detail {

// Paul Kellett's refined pink-noise filter driven by Gaussian white noise,
// run past its longest time constant before samples are kept.
class PinkNoise {
 public:
  explicit PinkNoise(Rng& rng) : rng_(rng) {
    for (int i = 0; i < 4000; ++i) next();
  }
  double next() {
    const double white = rng_.normal();
    b_[0] = 0.99886 * b_[0] + white * 0.0555179;
    b_[1] = 0.99332 * b_[1] + white * 0.0750759;
    b_[2] = 0.96900 * b_[2] + white * 0.1538520;
    b_[3] = 0.86650 * b_[3] + white * 0.3104856;
    b_[4] = 0.55000 * b_[4] + white * 0.5329522;
    b_[5] = -0.7616 * b_[5] - white * 0.0168980;
    const double pink = b_[0] + b_[1] + b_[2] + b_[3] + b_[4] + b_[5] + b_[6] + white * 0.5362;
    b_[6] = white * 0.115926;
    return pink;
  }

 private:
  Rng& rng_;
  double b_[7]{};
};

}  // namespace detail

inline std::string synth_trial_name(std::size_t index) {
  std::string digits = std::to_string(index + 1);
  return "trial_" + std::string(digits.size() < 5 ? 5 - digits.size() : 0, '0') + digits + ".csv";
}

inline std::string synth_participant_name(std::size_t p) {
  std::string digits = std::to_string(p + 1);
  return "P" + std::string(digits.size() < 2 ? 2 - digits.size() : 0, '0') + digits;
}

struct SynthDataset {
  DatasetManifest manifest;
  std::vector<Trial> trials;
};

/// Manifest rows a spec will produce, without synthesizing any samples.
/// Trials come in class order (Left, HighAmbiguity, Right); participants are
/// assigned round-robin over the global trial index.
inline DatasetManifest synth_manifest(const SynthSpec& spec) {
  spec.validate();
  DatasetManifest m;
  m.fs = spec.fs;
  std::size_t i = 0;
  for (std::size_t c = 0; c < kNumClasses; ++c) {
    const auto& ambig = kClassAmbiguities[c];
    for (std::size_t k = 0; k < spec.n_per_class[c]; ++k, ++i)
      m.rows.push_back({synth_trial_name(i), ambig[k % ambig.size()], synth_participant_name(i % spec.n_participants)});
  }
  return m;
}

/// Synthesizes the trials listed by synth_manifest. Each trial draws from its
/// own stream derive_seed(seed, {index}).
inline SynthDataset generate_trials(const SynthSpec& spec, std::size_t threads = 1) {
  SynthDataset out;
  out.manifest = synth_manifest(spec);

  std::vector<double> gains(spec.n_participants);
  for (std::size_t p = 0; p < spec.n_participants; ++p) {
    Rng r(derive_seed(spec.seed, {0x9a17u, p}));
    gains[p] = r.uniform(1.0 - spec.participant_jitter, 1.0 + spec.participant_jitter);
  }

  out.trials.resize(out.manifest.rows.size());
  parallel_for(out.trials.size(), threads, [&](std::size_t i) {
    const auto& row = out.manifest.rows[i];
    const auto cls = static_cast<std::size_t>(label_from_ambiguity(row.ambiguity));
    Rng rng(derive_seed(spec.seed, {i}));
    const std::size_t lo = spec.min_samples(), hi = spec.max_samples();
    const std::size_t n = lo + static_cast<std::size_t>(rng.below(hi - lo + 1));
    const std::size_t participant = i % spec.n_participants;

    Trial t;
    t.data = Tensor<float>({spec.channels, n});
    t.ambiguity = row.ambiguity;
    t.label = static_cast<Label>(cls);
    t.participant_id = row.participant_id;
    t.fs = spec.fs;
    t.source_name = row.path;
    t.length_out_of_range = n < kMinTrialSamples || n > kMaxTrialSamples;

    std::vector<double> phases;
    for (std::size_t s = 0; s < spec.signatures[cls].size(); ++s)
      phases.push_back(rng.uniform(0.0, 2.0 * std::numbers::pi));
    std::vector<double> noise(n);
    for (std::size_t ch = 0; ch < spec.channels; ++ch) {
      detail::PinkNoise pink(rng);
      double ss = 0.0;
      for (auto& v : noise) {
        v = pink.next();
        ss += v * v;
      }
      const double scale = ss > 0.0 ? spec.pink_amplitude / std::sqrt(ss / static_cast<double>(n)) : 0.0;
      auto dst = t.channel(ch);
      for (std::size_t j = 0; j < n; ++j) {
        double v = noise[j] * scale;
        const double time = static_cast<double>(j) / spec.fs;
        for (std::size_t s = 0; s < spec.signatures[cls].size(); ++s) {
          const auto& sig = spec.signatures[cls][s];
          v += gains[participant] * sig.amplitude * sig.spatial[ch] *
               std::sin(2.0 * std::numbers::pi * sig.freq_hz * time + phases[s]);
        }
        dst[j] = static_cast<float>(v);
      }
    }
    out.trials[i] = std::move(t);
  });
  return out;
}

/// Writes `<out>/manifest.csv` and one CSV per trial next to it.
inline SynthDataset generate(const SynthSpec& spec, const std::filesystem::path& out_dir, std::size_t threads = 1) {
  auto ds = generate_trials(spec, threads);
  std::filesystem::create_directories(out_dir);
  parallel_for(ds.trials.size(), threads,
               [&](std::size_t i) { write_trial_csv(out_dir / ds.trials[i].source_name, ds.trials[i]); });
  write_manifest(out_dir / "manifest.csv", ds.manifest);
  ds.manifest.base_dir = out_dir;
  return ds;
}

}  // namespace eegnet
