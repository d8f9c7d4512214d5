#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "eegnet/error.hpp"

namespace eegnet {

struct BandSpec {
  std::string name;
  double low_hz = 0.0;
  double high_hz = 0.0;

  void validate(double fs) const {
    if (!(low_hz > 0.0 && low_hz < high_hz && high_hz < fs / 2.0))
      throw ConfigError("band '" + name + "': need 0 < low (" + std::to_string(low_hz) + ") < high (" +
                        std::to_string(high_hz) + ") < fs/2 (" + std::to_string(fs / 2.0) + ")");
  }

  bool operator==(const BandSpec&) const = default;
};

// Frequency bands used to build the filtered training subsets.
inline const BandSpec kTheta{"theta", 4.0, 8.0};
inline const BandSpec kAlpha{"alpha", 8.0, 14.0};
inline const BandSpec kBeta{"beta", 14.0, 30.0};

inline std::vector<BandSpec> default_bands() { return {kTheta, kAlpha, kBeta}; }

inline constexpr double kDefaultSampleRate = 250.0;
inline constexpr int kDefaultFilterOrder = 4;

// Second-order section with a0 normalized to 1:
//   H(z) = (b0 + b1 z^-1 + b2 z^-2) / (1 + a1 z^-1 + a2 z^-2)
struct Biquad {
  double b0 = 1.0, b1 = 0.0, b2 = 0.0, a1 = 0.0, a2 = 0.0;

  std::complex<double> response(double omega) const {
    const std::complex<double> z1 = std::polar(1.0, -omega);
    const std::complex<double> z2 = z1 * z1;
    return (b0 + b1 * z1 + b2 * z2) / (1.0 + a1 * z1 + a2 * z2);
  }

  // Both poles strictly inside the unit circle (stability triangle).
  bool stable() const { return std::abs(a2) < 1.0 && std::abs(a1) < 1.0 + a2; }
};

struct FilterCascade {
  std::vector<Biquad> sections;
  int order = 0;
  BandSpec band;
  double fs = 0.0;
};

/// Digital Butterworth band-pass of total order `order` (poles), i.e. an
/// analog prototype of order/2 mapped low-pass -> band-pass, then bilinear
/// transform with pre-warped edges. Realized as order/2 biquads, each scaled
/// to unit gain at the center of the pre-warped band.
inline FilterCascade design_bandpass(const BandSpec& band, double fs, int order = kDefaultFilterOrder) {
  if (!(fs > 0.0)) throw ConfigError("design_bandpass: sampling rate must be positive");
  if (order < 2 || order > 8 || order % 2 != 0)
    throw ConfigError("design_bandpass: order must be one of 2, 4, 6, 8 (got " + std::to_string(order) + ")");
  band.validate(fs);

  using cd = std::complex<double>;
  const int proto_order = order / 2;
  const double w1 = 2.0 * fs * std::tan(std::numbers::pi * band.low_hz / fs);
  const double w2 = 2.0 * fs * std::tan(std::numbers::pi * band.high_hz / fs);
  const double bw = w2 - w1;
  const double w0 = std::sqrt(w1 * w2);

  std::vector<cd> zpoles;
  for (int k = 0; k < proto_order; ++k) {
    const cd p = std::polar(1.0, std::numbers::pi * (2.0 * k + proto_order + 1) / (2.0 * proto_order));
    const cd half = p * bw / 2.0;
    const cd root = std::sqrt(half * half - w0 * w0);
    for (const cd s : {half + root, half - root}) zpoles.push_back((2.0 * fs + s) / (2.0 * fs - s));
  }

  // Pair conjugate poles; real poles (very wide bands) pair with each other.
  std::vector<std::pair<cd, cd>> pairs;
  std::vector<double> reals;
  for (const auto& z : zpoles) {
    if (std::abs(z.imag()) < 1e-12) {
      reals.push_back(z.real());
    } else if (z.imag() > 0.0) {
      pairs.emplace_back(z, std::conj(z));
    }
  }
  std::sort(reals.begin(), reals.end());
  for (std::size_t i = 0; i + 1 < reals.size(); i += 2) pairs.emplace_back(reals[i], reals[i + 1]);
  if (pairs.size() != static_cast<std::size_t>(proto_order))
    throw Error("design_bandpass: failed to pair poles into second-order sections");
  std::sort(pairs.begin(), pairs.end(), [](const auto& a, const auto& b) { return a.first.imag() < b.first.imag(); });

  FilterCascade f;
  f.order = order;
  f.band = band;
  f.fs = fs;
  const double omega0 = 2.0 * std::atan(w0 / (2.0 * fs));
  for (const auto& [p1, p2] : pairs) {
    Biquad s;
    s.a1 = -(p1 + p2).real();
    s.a2 = (p1 * p2).real();
    // One zero at z = 1 (from s = 0) and one at z = -1 (from s = infinity).
    s.b0 = 1.0;
    s.b1 = 0.0;
    s.b2 = -1.0;
    const double g = 1.0 / std::abs(s.response(omega0));
    s.b0 *= g;
    s.b2 *= g;
    if (!s.stable()) throw Error("design_bandpass: unstable section for band " + band.name);
    f.sections.push_back(s);
  }
  return f;
}

inline double frequency_response(const FilterCascade& f, double freq_hz) {
  const double omega = 2.0 * std::numbers::pi * freq_hz / f.fs;
  double mag = 1.0;
  for (const auto& s : f.sections) mag *= std::abs(s.response(omega));
  return mag;
}

namespace detail {

// Transposed direct form II, one section, in place. `x0` sets the initial
// state to the steady state for a constant input of that value.
inline void biquad_filter(const Biquad& s, std::vector<double>& x, double x0) {
  const double gain_dc = (s.b0 + s.b1 + s.b2) / (1.0 + s.a1 + s.a2);
  double z1 = (gain_dc - s.b0) * x0;
  double z2 = (s.b2 - s.a2 * gain_dc) * x0;
  for (auto& v : x) {
    const double in = v;
    const double out = s.b0 * in + z1;
    z1 = s.b1 * in - s.a1 * out + z2;
    z2 = s.b2 * in - s.a2 * out;
    v = out;
  }
}

inline void cascade_filter(const FilterCascade& f, std::vector<double>& x) {
  for (const auto& s : f.sections) {
    const double x0 = x.empty() ? 0.0 : x.front();
    biquad_filter(s, x, x0);
  }
}

}  // namespace detail

inline std::size_t zero_phase_padding(const FilterCascade& f) { return 3 * static_cast<std::size_t>(f.order); }

/// Forward-backward filtering with odd reflective padding of 3*order samples
/// at each end. Net response is |H|^2 with zero phase.
inline std::vector<double> apply_zero_phase(std::span<const double> signal, const FilterCascade& f) {
  const std::size_t pad = zero_phase_padding(f);
  const std::size_t n = signal.size();
  if (n <= pad)
    throw ConfigError("apply_zero_phase: sequence of " + std::to_string(n) + " samples is too short; need more than " +
                      std::to_string(pad));

  std::vector<double> ext(n + 2 * pad);
  for (std::size_t i = 0; i < pad; ++i) {
    ext[i] = 2.0 * signal[0] - signal[pad - i];
    ext[pad + n + i] = 2.0 * signal[n - 1] - signal[n - 2 - i];
  }
  std::copy(signal.begin(), signal.end(), ext.begin() + static_cast<std::ptrdiff_t>(pad));

  detail::cascade_filter(f, ext);
  std::reverse(ext.begin(), ext.end());
  detail::cascade_filter(f, ext);
  std::reverse(ext.begin(), ext.end());
  return {ext.begin() + static_cast<std::ptrdiff_t>(pad), ext.begin() + static_cast<std::ptrdiff_t>(pad + n)};
}

inline std::vector<float> apply_zero_phase(std::span<const float> signal, const FilterCascade& f) {
  std::vector<double> in(signal.begin(), signal.end());
  const auto out = apply_zero_phase(std::span<const double>(in), f);
  return {out.begin(), out.end()};
}

}  // namespace eegnet
