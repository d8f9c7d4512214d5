#pragma once

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "eegnet/error.hpp"
#include "eegnet/hash.hpp"
#include "eegnet/io.hpp"
#include "eegnet/rng.hpp"
#include "eegnet/tensor.hpp"

namespace eegnet {

inline constexpr std::size_t kChannels = 31;
inline constexpr std::size_t kMinTrialSamples = 700;
inline constexpr std::size_t kMaxTrialSamples = 1500;

enum class Label : int { Left = 0, HighAmbiguity = 1, Right = 2 };
inline constexpr std::size_t kNumClasses = 3;

inline const char* to_string(Label l) {
  switch (l) {
    case Label::Left: return "Left";
    case Label::HighAmbiguity: return "HighAmbiguity";
    default: return "Right";
  }
}

// Stimulus ambiguity levels; a = 0.5 (fully ambiguous) was never presented.
inline constexpr std::array<double, 8> kAmbiguityLevels{0.15, 0.25, 0.4, 0.45, 0.55, 0.6, 0.75, 0.85};

inline Label label_from_ambiguity(double a) {
  constexpr double tol = 1e-9;
  auto is = [&](double v) { return std::abs(a - v) < tol; };
  if (is(0.15) || is(0.25)) return Label::Left;
  if (is(0.4) || is(0.45) || is(0.55) || is(0.6)) return Label::HighAmbiguity;
  if (is(0.75) || is(0.85)) return Label::Right;
  throw FormatError("ambiguity value " + std::to_string(a) + " is not one of the presented levels");
}

/// One EEG recording: data is [channels, samples], row-major.
struct Trial {
  Tensor<float> data;
  double ambiguity = 0.0;
  Label label = Label::Left;
  std::string participant_id;
  double fs = 0.0;
  std::string band_tag = "raw";
  std::string source_name;  // original file name, used for band-subset layout
  char delimiter = ',';
  bool length_out_of_range = false;
  std::vector<std::size_t> flat_channels;  // zero-variance channels seen by normalize_per_channel

  std::size_t channels() const { return data.dim(0); }
  std::size_t samples() const { return data.dim(1); }
  std::span<float> channel(std::size_t c) { return {data.ptr() + c * samples(), samples()}; }
  std::span<const float> channel(std::size_t c) const { return {data.ptr() + c * samples(), samples()}; }
  int label_index() const { return static_cast<int>(label); }
};

inline std::uint64_t trial_hash(const Trial& t) {
  Fnv1a h;
  h.str(t.participant_id);
  h.str(t.source_name);
  h.str(t.band_tag);
  h.u64(static_cast<std::uint64_t>(t.label));
  h.values(t.data.span());
  return h.digest();
}

struct ManifestRow {
  std::string path;  // relative to the manifest's directory
  double ambiguity = 0.0;
  std::string participant_id;
};

struct DatasetManifest {
  static constexpr int kFormatVersion = 1;
  std::vector<ManifestRow> rows;
  double fs = 0.0;
  int version = kFormatVersion;
  std::filesystem::path base_dir;

  std::vector<int> labels() const {
    std::vector<int> out;
    out.reserve(rows.size());
    for (const auto& r : rows) out.push_back(static_cast<int>(label_from_ambiguity(r.ambiguity)));
    return out;
  }
  std::vector<std::string> participants() const {
    std::vector<std::string> out;
    for (const auto& r : rows) out.push_back(r.participant_id);
    return out;
  }
  void validate() const {
    std::set<std::string> seen;
    for (const auto& r : rows) {
      if (!seen.insert(r.path).second) throw FormatError("manifest: duplicate path " + r.path);
      label_from_ambiguity(r.ambiguity);
    }
    if (!(fs > 0.0)) throw FormatError("manifest: sampling rate must be positive");
  }
};

inline constexpr std::string_view kManifestHeader = "path,ambiguity,participant_id,fs_hz";

namespace detail {

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    auto line = text.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    lines.push_back(line);
    pos = end + 1;
  }
  while (!lines.empty() && lines.back().find_first_not_of(" \t") == std::string_view::npos) lines.pop_back();
  return lines;
}

inline std::vector<std::string_view> split_fields(std::string_view line, char delim) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    auto end = line.find(delim, pos);
    if (end == std::string_view::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, end - pos));
    pos = end + 1;
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

template <class T>
bool parse_number(std::string_view s, T& out) {
  s = trim(s);
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return false;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), out);
  return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

inline char detect_delimiter(std::string_view line) {
  if (line.find('\t') != std::string_view::npos) return '\t';
  if (line.find(';') != std::string_view::npos) return ';';
  return ',';
}

}  // namespace detail

/// Reads one trial file: 31 rows (channels) by T columns of decimal reals,
/// separated by comma, semicolon or tab (detected from the first line).
inline Trial load_trial_csv(const std::filesystem::path& file, const ManifestRow& row, double fs) {
  const std::string text = detail::read_text(file);
  const auto lines = detail::split_lines(text);
  if (lines.size() != kChannels)
    throw FormatError(file.string() + ": expected " + std::to_string(kChannels) + " channel rows, found " +
                      std::to_string(lines.size()));
  const char delim = detail::detect_delimiter(lines.front());
  const std::size_t samples = detail::split_fields(lines.front(), delim).size();

  Trial t;
  t.data = Tensor<float>({kChannels, samples});
  for (std::size_t r = 0; r < lines.size(); ++r) {
    const auto fields = detail::split_fields(lines[r], delim);
    if (fields.size() != samples)
      throw FormatError(file.string() + ": row " + std::to_string(r + 1) + " has " + std::to_string(fields.size()) +
                        " columns, expected " + std::to_string(samples));
    for (std::size_t c = 0; c < samples; ++c) {
      float v = 0.0f;
      if (!detail::parse_number(fields[c], v) || !std::isfinite(v))
        throw FormatError(file.string() + ": non-numeric value '" + std::string(fields[c]) + "' at row " +
                          std::to_string(r + 1) + ", column " + std::to_string(c + 1));
      t.data[r * samples + c] = v;
    }
  }
  t.ambiguity = row.ambiguity;
  t.label = label_from_ambiguity(row.ambiguity);
  t.participant_id = row.participant_id;
  t.fs = fs;
  t.source_name = file.filename().string();
  t.delimiter = delim;
  t.length_out_of_range = samples < kMinTrialSamples || samples > kMaxTrialSamples;
  return t;
}

inline std::string format_float(float v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void write_trial_csv(const std::filesystem::path& file, const Trial& t) {
  std::string text;
  text.reserve(t.data.size() * 12);
  for (std::size_t c = 0; c < t.channels(); ++c) {
    const auto ch = t.channel(c);
    for (std::size_t i = 0; i < ch.size(); ++i) {
      if (i) text += ',';
      text += format_float(ch[i]);
    }
    text += '\n';
  }
  detail::write_text_atomic(file, text);
}

inline DatasetManifest read_manifest(const std::filesystem::path& file) {
  const std::string text = detail::read_text(file);
  const auto lines = detail::split_lines(text);
  if (lines.empty() || detail::trim(lines.front()) != kManifestHeader)
    throw FormatError(file.string() + ": manifest header must be '" + std::string(kManifestHeader) + "'");
  DatasetManifest m;
  m.base_dir = file.parent_path();
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto f = detail::split_fields(lines[i], ',');
    if (f.size() != 4) throw FormatError(file.string() + ": line " + std::to_string(i + 1) + " needs 4 fields");
    ManifestRow row;
    row.path = std::string(detail::trim(f[0]));
    double fs = 0.0;
    if (!detail::parse_number(f[1], row.ambiguity) || !detail::parse_number(f[3], fs))
      throw FormatError(file.string() + ": line " + std::to_string(i + 1) + " has a non-numeric field");
    row.participant_id = std::string(detail::trim(f[2]));
    if (m.fs == 0.0) m.fs = fs;
    if (fs != m.fs) throw FormatError(file.string() + ": mixed sampling rates in one manifest");
    m.rows.push_back(std::move(row));
  }
  m.validate();
  return m;
}

inline std::string format_double(double v) {
  char buf[32];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline void write_manifest(const std::filesystem::path& file, const DatasetManifest& m) {
  std::string text(kManifestHeader);
  text += '\n';
  for (const auto& r : m.rows)
    text += r.path + ',' + format_double(r.ambiguity) + ',' + r.participant_id + ',' + format_double(m.fs) + '\n';
  detail::write_text_atomic(file, text);
}

inline std::vector<Trial> load_dataset(const DatasetManifest& m) {
  std::vector<Trial> out;
  out.reserve(m.rows.size());
  for (const auto& row : m.rows) out.push_back(load_trial_csv(m.base_dir / row.path, row, m.fs));
  return out;
}

/// Linear resampling of every channel to `target` samples spanning the full
/// trial: output j reads input position j * (T-1) / (target-1).
inline Trial standardize_length(const Trial& t, std::size_t target = 256) {
  const std::size_t n = t.samples();
  if (n < 2 || target < 2) throw ConfigError("standardize_length: need at least 2 samples");
  if (n == target) return t;
  Trial out = t;
  out.data = Tensor<float>({t.channels(), target});
  const double scale = static_cast<double>(n - 1) / static_cast<double>(target - 1);
  for (std::size_t c = 0; c < t.channels(); ++c) {
    const auto src = t.channel(c);
    auto dst = out.channel(c);
    for (std::size_t j = 0; j < target; ++j) {
      const double pos = static_cast<double>(j) * scale;
      auto i = static_cast<std::size_t>(pos);
      if (i >= n - 1) i = n - 2;
      const double frac = pos - static_cast<double>(i);
      dst[j] = static_cast<float>(static_cast<double>(src[i]) +
                                  frac * (static_cast<double>(src[i + 1]) - static_cast<double>(src[i])));
    }
    dst[target - 1] = src[n - 1];
  }
  return out;
}

/// Per-channel z-score (population standard deviation). Channels with zero
/// variance are set to zero and listed in `flat_channels`.
inline Trial normalize_per_channel(const Trial& t) {
  Trial out = t;
  out.flat_channels.clear();
  for (std::size_t c = 0; c < t.channels(); ++c) {
    auto ch = out.channel(c);
    double mean = 0.0;
    for (float v : ch) mean += v;
    mean /= static_cast<double>(ch.size());
    double var = 0.0;
    for (float v : ch) var += (v - mean) * (v - mean);
    var /= static_cast<double>(ch.size());
    if (var <= 1e-20) {
      std::fill(ch.begin(), ch.end(), 0.0f);
      out.flat_channels.push_back(c);
      continue;
    }
    const double inv_sd = 1.0 / std::sqrt(var);
    for (float& v : ch) v = static_cast<float>((v - mean) * inv_sd);
  }
  return out;
}

/// Per-trial scaling: each channel loses its mean, then the whole trial is
/// divided by one RMS taken over all channels, so relative channel amplitudes
/// survive. Zero-variance channels are listed in `flat_channels`.
inline Trial normalize_per_trial(const Trial& t) {
  Trial out = t;
  out.flat_channels.clear();
  double ss = 0.0;
  for (std::size_t c = 0; c < t.channels(); ++c) {
    auto ch = out.channel(c);
    double mean = 0.0;
    for (float v : ch) mean += v;
    mean /= static_cast<double>(ch.size());
    double var = 0.0;
    for (float& v : ch) {
      v = static_cast<float>(v - mean);
      var += static_cast<double>(v) * v;
    }
    if (var <= 1e-20 * static_cast<double>(ch.size())) out.flat_channels.push_back(c);
    ss += var;
  }
  const double ms = ss / static_cast<double>(out.data.size());
  const float scale = ms > 1e-20 ? static_cast<float>(1.0 / std::sqrt(ms)) : 0.0f;
  float* p = out.data.ptr();
  for (std::size_t i = 0; i < out.data.size(); ++i) p[i] *= scale;
  return out;
}

enum class Normalization { None, PerChannel, PerTrial };

inline const char* to_string(Normalization n) {
  switch (n) {
    case Normalization::None: return "none";
    case Normalization::PerChannel: return "per_channel";
    case Normalization::PerTrial: return "per_trial";
  }
  return "?";
}

inline Normalization normalization_from_string(const std::string& s) {
  if (s == "none") return Normalization::None;
  if (s == "per_channel") return Normalization::PerChannel;
  if (s == "per_trial") return Normalization::PerTrial;
  throw ConfigError("normalization must be none, per_channel or per_trial, got '" + s + "'");
}

// ---------------------------------------------------------------- splits

struct SplitPlan {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
  double ratio = 0.6;
  std::uint64_t seed = 0;
  bool grouped = false;
};

/// Class-stratified split: per class, round(ratio * class_size) trials go to
/// train. With grouped=true whole participants are assigned instead, so no
/// participant appears on both sides (per-class counts are then approximate).
inline SplitPlan split_train_test(std::span<const int> labels, std::span<const std::string> participants,
                                  double ratio, std::uint64_t seed, bool grouped = false,
                                  std::size_t classes = kNumClasses) {
  if (!(ratio > 0.0 && ratio < 1.0)) throw ConfigError("split ratio must lie in (0, 1)");
  if (grouped && participants.size() != labels.size())
    throw ConfigError("grouped split needs one participant id per trial");
  std::vector<std::vector<std::size_t>> by_class(classes);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= classes)
      throw ConfigError("split: label out of range at index " + std::to_string(i));
    by_class[static_cast<std::size_t>(labels[i])].push_back(i);
  }
  for (std::size_t c = 0; c < classes; ++c)
    if (by_class[c].empty()) throw ConfigError("split: class " + std::to_string(c) + " has no trials");

  SplitPlan plan;
  plan.ratio = ratio;
  plan.seed = seed;
  plan.grouped = grouped;
  Rng rng(derive_seed(seed, {0x5b1u}));
  std::vector<char> in_train(labels.size(), 0);

  if (!grouped) {
    for (auto& idx : by_class) {
      rng.shuffle(std::span<std::size_t>(idx));
      const auto n_train = static_cast<std::size_t>(std::llround(ratio * static_cast<double>(idx.size())));
      for (std::size_t k = 0; k < n_train; ++k) in_train[idx[k]] = 1;
    }
  } else {
    std::map<std::string, std::vector<std::size_t>> groups;
    for (std::size_t i = 0; i < participants.size(); ++i) groups[participants[i]].push_back(i);
    std::vector<std::string> ids;
    for (const auto& [id, _] : groups) ids.push_back(id);
    rng.shuffle(std::span<std::string>(ids));
    const double target = ratio * static_cast<double>(labels.size());
    std::size_t taken = 0;
    for (const auto& id : ids) {
      const auto& members = groups[id];
      if (taken > 0 && static_cast<double>(taken) + static_cast<double>(members.size()) / 2.0 > target) continue;
      for (auto i : members) in_train[i] = 1;
      taken += members.size();
    }
  }
  for (std::size_t i = 0; i < labels.size(); ++i) (in_train[i] ? plan.train : plan.test).push_back(i);
  return plan;
}

inline SplitPlan split_train_test(const DatasetManifest& m, double ratio, std::uint64_t seed, bool grouped = false) {
  const auto labels = m.labels();
  const auto parts = m.participants();
  return split_train_test(labels, parts, ratio, seed, grouped);
}

struct FoldPlan {
  std::size_t k = 0;
  std::vector<std::size_t> fold_of;  // per trial index

  std::vector<std::size_t> members(std::size_t fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < fold_of.size(); ++i)
      if (fold_of[i] == fold) out.push_back(i);
    return out;
  }
};

/// Participant-grouped folds. Participants are taken in descending order of
/// trial count (ties by id) and each goes to the fold currently holding the
/// fewest trials (ties to the lowest fold index).
inline FoldPlan make_folds(std::span<const std::string> participants, std::size_t k) {
  if (k == 0) throw ConfigError("make_folds: k must be positive");
  std::map<std::string, std::size_t> counts;
  for (const auto& p : participants) ++counts[p];
  if (counts.size() < k)
    throw ConfigError("make_folds: " + std::to_string(counts.size()) + " participants cannot fill " +
                      std::to_string(k) + " folds");
  std::vector<std::pair<std::string, std::size_t>> order(counts.begin(), counts.end());
  std::stable_sort(order.begin(), order.end(), [](const auto& a, const auto& b) { return a.second > b.second; });

  std::vector<std::size_t> load(k, 0);
  std::map<std::string, std::size_t> fold_of_participant;
  for (const auto& [id, n] : order) {
    const auto f = static_cast<std::size_t>(std::min_element(load.begin(), load.end()) - load.begin());
    load[f] += n;
    fold_of_participant[id] = f;
  }
  FoldPlan plan;
  plan.k = k;
  for (const auto& p : participants) plan.fold_of.push_back(fold_of_participant[p]);
  return plan;
}

inline FoldPlan make_folds(const DatasetManifest& m, std::size_t k = 20) {
  const auto parts = m.participants();
  return make_folds(parts, k);
}

inline nlohmann::json to_json(const SplitPlan& p) {
  return {{"format", "eegnet-split"}, {"version", 1},        {"ratio", p.ratio}, {"seed", p.seed},
          {"grouped", p.grouped},     {"train", p.train}, {"test", p.test}};
}

inline SplitPlan split_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "eegnet-split" || j.value("version", 0) != 1)
    throw FormatError("not a version-1 split plan");
  SplitPlan p;
  p.ratio = j.at("ratio").get<double>();
  p.seed = j.at("seed").get<std::uint64_t>();
  p.grouped = j.at("grouped").get<bool>();
  p.train = j.at("train").get<std::vector<std::size_t>>();
  p.test = j.at("test").get<std::vector<std::size_t>>();
  return p;
}

inline nlohmann::json to_json(const FoldPlan& p) {
  return {{"format", "eegnet-folds"}, {"version", 1}, {"k", p.k}, {"fold_of", p.fold_of}};
}

inline FoldPlan folds_from_json(const nlohmann::json& j) {
  if (j.value("format", "") != "eegnet-folds" || j.value("version", 0) != 1)
    throw FormatError("not a version-1 fold plan");
  FoldPlan p;
  p.k = j.at("k").get<std::size_t>();
  p.fold_of = j.at("fold_of").get<std::vector<std::size_t>>();
  return p;
}

}  // namespace eegnet
