#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "eegnet/dataset.hpp"
#include "eegnet/dsp.hpp"
#include "eegnet/error.hpp"
#include "eegnet/hash.hpp"
#include "eegnet/parallel.hpp"

namespace eegnet {

struct CorpusProvenance {
  std::uint64_t source_hash = 0;
  double fs = 0.0;
  int filter_order = kDefaultFilterOrder;
  std::vector<BandSpec> bands;
  std::vector<FilterCascade> filters;
};

/// Band-filtered copies of a dataset. Trial i of every subset is the filtered
/// version of trial i of the source, with label and participant unchanged.
struct AugmentedCorpus {
  std::vector<std::string> band_order;
  std::map<std::string, std::vector<Trial>> subsets;
  CorpusProvenance provenance;

  const std::vector<Trial>& subset(const std::string& band) const {
    auto it = subsets.find(band);
    if (it == subsets.end()) throw ConfigError("corpus has no '" + band + "' subset");
    return it->second;
  }
  std::size_t total_trials() const {
    std::size_t n = 0;
    for (const auto& [_, v] : subsets) n += v.size();
    return n;
  }
};

inline std::uint64_t dataset_hash(const std::vector<Trial>& trials) {
  Fnv1a h;
  for (const auto& t : trials) h.u64(trial_hash(t));
  return h.digest();
}

inline std::vector<Trial> generate_band_subset(const std::vector<Trial>& dataset, const BandSpec& band, double fs,
                                               int order = kDefaultFilterOrder, std::size_t threads = 1) {
  if (dataset.empty()) throw ConfigError("generate_band_subset: dataset is empty");
  const FilterCascade filter = design_bandpass(band, fs, order);
  std::vector<Trial> out(dataset.size());
  parallel_for(dataset.size(), threads, [&](std::size_t i) {
    Trial t = dataset[i];
    for (std::size_t c = 0; c < t.channels(); ++c) {
      auto ch = t.channel(c);
      const auto filtered = apply_zero_phase(std::span<const float>(ch.data(), ch.size()), filter);
      std::copy(filtered.begin(), filtered.end(), ch.begin());
    }
    t.band_tag = band.name;
    out[i] = std::move(t);
  });
  return out;
}

inline AugmentedCorpus build_corpus(const std::vector<Trial>& dataset, const std::vector<BandSpec>& bands, double fs,
                                    int order = kDefaultFilterOrder, std::size_t threads = 1) {
  if (bands.empty()) throw ConfigError("build_corpus: no bands requested");
  std::set<std::string> names;
  for (const auto& b : bands)
    if (!names.insert(b.name).second) throw ConfigError("build_corpus: duplicate band '" + b.name + "'");

  AugmentedCorpus corpus;
  corpus.provenance.source_hash = dataset_hash(dataset);
  corpus.provenance.fs = fs;
  corpus.provenance.filter_order = order;
  corpus.provenance.bands = bands;
  for (const auto& b : bands) {
    corpus.provenance.filters.push_back(design_bandpass(b, fs, order));
    corpus.band_order.push_back(b.name);
    corpus.subsets[b.name] = generate_band_subset(dataset, b, fs, order, threads);
  }
  return corpus;
}

inline std::uint64_t corpus_hash(const AugmentedCorpus& c) {
  Fnv1a h;
  h.u64(c.provenance.source_hash);
  h.f64(c.provenance.fs);
  h.u64(static_cast<std::uint64_t>(c.provenance.filter_order));
  for (const auto& name : c.band_order) {
    h.str(name);
    h.u64(dataset_hash(c.subsets.at(name)));
  }
  return h.digest();
}

inline nlohmann::json to_json(const CorpusProvenance& p) {
  nlohmann::json bands = nlohmann::json::array();
  for (std::size_t i = 0; i < p.bands.size(); ++i) {
    nlohmann::json sections = nlohmann::json::array();
    for (const auto& s : p.filters[i].sections) sections.push_back({s.b0, s.b1, s.b2, s.a1, s.a2});
    bands.push_back({{"name", p.bands[i].name},
                     {"low_hz", p.bands[i].low_hz},
                     {"high_hz", p.bands[i].high_hz},
                     {"sections", sections}});
  }
  return {{"source_hash", hex64(p.source_hash)}, {"fs_hz", p.fs}, {"filter_order", p.filter_order},
          {"filter", "butterworth-bandpass-zero-phase"}, {"bands", bands}};
}

/// Writes <out>/<band>/<source file name> for every trial, a manifest per
/// band, and corpus.json with the provenance record.
inline void write_corpus(const AugmentedCorpus& corpus, const std::filesystem::path& out_dir, std::size_t threads = 1) {
  for (const auto& name : corpus.band_order) {
    const auto& trials = corpus.subsets.at(name);
    const auto dir = out_dir / name;
    std::filesystem::create_directories(dir);
    DatasetManifest m;
    m.fs = corpus.provenance.fs;
    for (const auto& t : trials) m.rows.push_back({t.source_name, t.ambiguity, t.participant_id});
    m.validate();
    parallel_for(trials.size(), threads, [&](std::size_t i) { write_trial_csv(dir / trials[i].source_name, trials[i]); });
    write_manifest(dir / "manifest.csv", m);
  }
  auto doc = to_json(corpus.provenance);
  doc["corpus_hash"] = hex64(corpus_hash(corpus));
  doc["subsets"] = corpus.band_order;
  detail::write_text_atomic(out_dir / "corpus.json", doc.dump(2) + "\n");
}

/// Reads a corpus previously written by write_corpus; band subsets are loaded
/// from their per-band manifests and tagged.
inline AugmentedCorpus read_corpus(const std::filesystem::path& dir) {
  const auto doc = nlohmann::json::parse(detail::read_text(dir / "corpus.json"));
  AugmentedCorpus c;
  c.provenance.fs = doc.at("fs_hz").get<double>();
  c.provenance.filter_order = doc.at("filter_order").get<int>();
  c.provenance.source_hash = std::stoull(doc.at("source_hash").get<std::string>(), nullptr, 16);
  for (const auto& b : doc.at("bands")) {
    BandSpec spec{b.at("name").get<std::string>(), b.at("low_hz").get<double>(), b.at("high_hz").get<double>()};
    c.provenance.bands.push_back(spec);
    c.provenance.filters.push_back(design_bandpass(spec, c.provenance.fs, c.provenance.filter_order));
    auto trials = load_dataset(read_manifest(dir / spec.name / "manifest.csv"));
    for (auto& t : trials) t.band_tag = spec.name;
    c.band_order.push_back(spec.name);
    c.subsets[spec.name] = std::move(trials);
  }
  return c;
}

}  // namespace eegnet
