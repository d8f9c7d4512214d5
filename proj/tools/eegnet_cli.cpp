// eegnet command-line driver.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage or configuration error.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "eegnet/eegnet.hpp"
#include "eegnet/run_config.hpp"

namespace fs = std::filesystem;
using namespace eegnet;
using nlohmann::json;

namespace {

struct Globals {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> threads;
};

RunConfig resolve_config(const Globals& g) {
  RunConfig cfg = g.config_path.empty() ? RunConfig{} : load_run_config(g.config_path);
  if (g.seed) cfg.seed = *g.seed;
  if (g.threads) cfg.threads = *g.threads;
  cfg.validate();
  return cfg;
}

fs::path require_out(const Globals& g, const std::string& command) {
  if (g.out.empty()) throw ConfigError(command + ": --out is required");
  fs::create_directories(g.out);
  return g.out;
}

void write_json(const fs::path& file, const json& doc) { detail::write_text_atomic(file, doc.dump(2) + "\n"); }

void write_effective_config(const fs::path& out, const RunConfig& cfg, const std::string& command, json args) {
  write_json(out / "effective_config.json", {{"command", command}, {"config", to_json(cfg)}, {"arguments", args}});
}

fs::path manifest_path(const fs::path& data) {
  return fs::is_directory(data) ? data / "manifest.csv" : data;
}

struct Loaded {
  DatasetManifest manifest;
  std::vector<Trial> trials;
};

Loaded load_data(const std::string& data) {
  if (data.empty()) throw ConfigError("--data is required");
  Loaded l;
  l.manifest = read_manifest(manifest_path(data));
  l.trials = load_dataset(l.manifest);
  return l;
}

SplitPlan resolve_split(const RunConfig& cfg, const DatasetManifest& m, const std::string& split_path) {
  if (!split_path.empty()) {
    auto plan = split_from_json(json::parse(detail::read_text(split_path)));
    for (auto i : plan.train)
      if (i >= m.rows.size()) throw FormatError(split_path + ": index out of range for the dataset");
    for (auto i : plan.test)
      if (i >= m.rows.size()) throw FormatError(split_path + ": index out of range for the dataset");
    return plan;
  }
  return split_train_test(m, cfg.split_ratio, cfg.seed, cfg.grouped_split);
}

ModelParams<float> initial_params(const RunConfig& cfg) {
  Rng rng(derive_seed(cfg.seed, {0x1a17u}));
  return init_params<float>(cfg.model, rng);
}

std::string f1_line(const EvalReport& r) {
  char buf[160];
  std::snprintf(buf, sizeof buf, "weighted F1 %.4f  accuracy %.4f  per-class F1 %.4f %.4f %.4f", r.weighted_f1,
                r.accuracy, r.per_class[0].f1, r.per_class[1].f1, r.per_class[2].f1);
  return buf;
}

json history_json(const TrainHistory& h) {
  return {{"loss", h.loss}, {"accuracy", h.accuracy}, {"seconds", h.seconds}};
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    auto next = s.find(',', pos);
    if (next == std::string::npos) next = s.size();
    if (next > pos) out.push_back(s.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

// ------------------------------------------------------------------ commands

int cmd_synth(const Globals& g, const std::vector<std::size_t>& per_class, std::size_t participants) {
  const auto cfg = resolve_config(g);
  const auto out = require_out(g, "synth");
  auto spec = default_benchmark_spec();
  if (!per_class.empty()) {
    if (per_class.size() != kNumClasses) throw ConfigError("synth: --per-class needs three counts");
    std::copy(per_class.begin(), per_class.end(), spec.n_per_class.begin());
  }
  spec.n_participants = participants;
  spec.seed = cfg.seed;
  const auto ds = generate(spec, out, cfg.threads);
  const auto hash = dataset_hash(ds.trials);
  write_effective_config(out, cfg, "synth",
                         {{"per_class", spec.n_per_class}, {"participants", participants}});
  write_json(out / "synth.json", {{"seed", cfg.seed},
                                  {"trials", ds.trials.size()},
                                  {"per_class", spec.n_per_class},
                                  {"participants", participants},
                                  {"fs_hz", spec.fs},
                                  {"dataset_hash", hex64(hash)}});
  std::printf("synth: %zu trials (%zu/%zu/%zu), %zu participants, seed %llu\n", ds.trials.size(), spec.n_per_class[0],
              spec.n_per_class[1], spec.n_per_class[2], participants, static_cast<unsigned long long>(cfg.seed));
  std::printf("dataset hash %s -> %s\n", hex64(hash).c_str(), out.string().c_str());
  return 0;
}

int cmd_augment(const Globals& g, const std::string& data) {
  const auto cfg = resolve_config(g);
  const auto out = require_out(g, "augment");
  const auto src = load_data(data);
  const auto corpus = build_corpus(src.trials, cfg.bands, src.manifest.fs, cfg.filter_order, cfg.threads);
  write_corpus(corpus, out, cfg.threads);
  write_effective_config(out, cfg, "augment", {{"data", data}});
  for (const auto& name : corpus.band_order)
    std::printf("augment: %-6s %zu trials\n", name.c_str(), corpus.subset(name).size());
  std::printf("corpus: %zu trials, hash %s -> %s\n", corpus.total_trials(), hex64(corpus_hash(corpus)).c_str(),
              out.string().c_str());
  return 0;
}

int cmd_train(const Globals& g, const std::string& data, std::optional<std::size_t> epochs,
              const std::string& split_path) {
  auto cfg = resolve_config(g);
  if (epochs) cfg.train.epochs = *epochs;
  cfg.validate();
  const auto out = require_out(g, "train");
  const auto src = load_data(data);
  const auto split = resolve_split(cfg, src.manifest, split_path);
  const auto prep = cfg.prepare();
  const auto train_set = prepare_sequences(src.trials, split.train, cfg.model, prep);
  const auto test_set = prepare_sequences(src.trials, split.test, cfg.model, prep);

  Checkpoint ckpt{initial_params(cfg), {}};
  const auto tc = cfg.train_config();
  const auto hist = train(ckpt.params, train_set, tc);
  ckpt.provenance.push_back({"raw", tc.epochs, tc.seed, hex64(train_set.data_hash)});
  const auto report = evaluate(ckpt.params, test_set);

  write_effective_config(out, cfg, "train", {{"data", data}, {"split", split_path}});
  write_json(out / "split.json", to_json(split));
  save_checkpoint(ckpt, out / "model.ckpt");
  write_json(out / "history.json", history_json(hist));
  write_json(out / "eval.json", to_json(report));
  std::printf("train: %zu epochs on %zu trials, seed %llu, final loss %.4f\n", tc.epochs, train_set.size(),
              static_cast<unsigned long long>(tc.seed), hist.loss.back());
  std::printf("test (%zu trials): %s\n", test_set.size(), f1_line(report).c_str());
  return 0;
}

int cmd_pretrain(const Globals& g, const std::string& corpus_dir, const std::string& order_arg,
                 std::optional<std::size_t> epochs, const std::string& split_path) {
  const auto cfg = resolve_config(g);
  const auto out = require_out(g, "pretrain");
  if (corpus_dir.empty()) throw ConfigError("pretrain: --corpus is required");
  const auto corpus = read_corpus(corpus_dir);
  const auto order = order_arg.empty() ? corpus.band_order : split_list(order_arg);
  const auto manifest = read_manifest(fs::path(corpus_dir) / corpus.band_order.front() / "manifest.csv");
  const auto split = resolve_split(cfg, manifest, split_path);
  const std::size_t per_stage = epochs.value_or(cfg.protocol.pretrain_epochs);

  const auto stages =
      pretrain_curriculum(initial_params(cfg), corpus, order, split, per_stage, cfg.train_config(), cfg.prepare());
  json listing = json::array();
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const auto name = "stage_" + std::to_string(i + 1) + "_" + order[i] + ".ckpt";
    save_checkpoint(stages[i], out / name);
    listing.push_back({{"checkpoint", name}, {"provenance", stages[i].provenance}});
    std::printf("pretrain: stage %zu %-6s %zu epochs, seed %llu -> %s\n", i + 1, order[i].c_str(), per_stage,
                static_cast<unsigned long long>(stages[i].provenance.back().seed), name.c_str());
  }
  write_effective_config(out, cfg, "pretrain", {{"corpus", corpus_dir}, {"order", order}, {"split", split_path}});
  write_json(out / "split.json", to_json(split));
  write_json(out / "pretrain.json", {{"seed", cfg.seed}, {"epochs_per_stage", per_stage}, {"stages", listing}});
  return 0;
}

int cmd_finetune(const Globals& g, const std::string& checkpoint, const std::string& data,
                 std::optional<std::size_t> epochs, const std::string& split_path) {
  const auto cfg = resolve_config(g);
  const auto out = require_out(g, "finetune");
  if (checkpoint.empty()) throw ConfigError("finetune: --checkpoint is required");
  const auto start = load_checkpoint(checkpoint, cfg.model);
  const auto src = load_data(data);
  const auto split = resolve_split(cfg, src.manifest, split_path);
  const auto prep = cfg.prepare();
  const auto train_set = prepare_sequences(src.trials, split.train, cfg.model, prep);
  const auto test_set = prepare_sequences(src.trials, split.test, cfg.model, prep);
  const std::size_t n = epochs.value_or(cfg.protocol.finetune_epochs);

  const auto tuned = finetune(start, cfg.model, train_set, n, cfg.train_config());
  const auto report = evaluate(tuned.params, test_set);
  write_effective_config(out, cfg, "finetune", {{"checkpoint", checkpoint}, {"data", data}, {"split", split_path}});
  write_json(out / "split.json", to_json(split));
  save_checkpoint(tuned, out / "model.ckpt");
  write_json(out / "eval.json", to_json(report));
  std::printf("finetune: %zu epochs from %s, seed %llu, %zu stages in provenance\n", n, checkpoint.c_str(),
              static_cast<unsigned long long>(cfg.seed), tuned.provenance.size());
  std::printf("test (%zu trials): %s\n", test_set.size(), f1_line(report).c_str());
  return 0;
}

int cmd_eval(const Globals& g, const std::string& checkpoint, const std::string& data, const std::string& split_path,
             const std::string& subset) {
  const auto cfg = resolve_config(g);
  if (checkpoint.empty()) throw ConfigError("eval: --checkpoint is required");
  if (subset != "test" && subset != "train" && subset != "all")
    throw ConfigError("eval: --subset must be test, train or all");
  const auto ckpt = load_checkpoint(checkpoint, cfg.model);
  const auto src = load_data(data);
  std::vector<std::size_t> rows;
  if (subset == "all") {
    for (std::size_t i = 0; i < src.trials.size(); ++i) rows.push_back(i);
  } else {
    const auto split = resolve_split(cfg, src.manifest, split_path);
    rows = subset == "test" ? split.test : split.train;
  }
  const auto set = prepare_sequences(src.trials, rows, cfg.model, cfg.prepare());
  const auto report = evaluate(ckpt.params, set);
  std::printf("eval: %s on %zu %s trials\n%s\n", checkpoint.c_str(), set.size(), subset.c_str(),
              f1_line(report).c_str());
  if (!g.out.empty()) {
    const auto out = require_out(g, "eval");
    write_effective_config(out, cfg, "eval", {{"checkpoint", checkpoint}, {"data", data}, {"subset", subset}});
    auto doc = to_json(report);
    doc["provenance"] = ckpt.provenance;
    write_json(out / "eval.json", doc);
  }
  return 0;
}

int cmd_table2(const Globals& g, const std::string& data, const std::string& corpus_dir, const std::string& split_path) {
  const auto cfg = resolve_config(g);
  const auto out = require_out(g, "table2");
  const auto src = load_data(data);
  const auto split = resolve_split(cfg, src.manifest, split_path);
  const auto corpus = corpus_dir.empty()
                          ? build_corpus(src.trials, cfg.bands, src.manifest.fs, cfg.filter_order, cfg.threads)
                          : read_corpus(corpus_dir);
  if (corpus.provenance.source_hash != dataset_hash(src.trials))
    throw ConfigError("table2: corpus was not built from this dataset");

  const auto report =
      run_table2_protocol(src.trials, corpus, split, cfg.model, cfg.train_config(), cfg.protocol, cfg.prepare());
  write_effective_config(out, cfg, "table2", {{"data", data}, {"corpus", corpus_dir}, {"split", split_path}});
  write_json(out / "split.json", to_json(split));
  write_json(out / "table2.json", to_json(report));
  const auto text = format_table2(report);
  detail::write_text_atomic(out / "table2.txt", text);
  std::printf("table2: seed %llu, %zu train / %zu test trials\n%s", static_cast<unsigned long long>(cfg.seed),
              report.train_trials, report.test_trials, text.c_str());
  return 0;
}

int cmd_params(const Globals& g) {
  const auto cfg = resolve_config(g);
  const auto rows = param_breakdown(cfg.model);
  json layers = json::array();
  std::printf("%-10s %-6s %-12s %12s\n", "layer", "kind", "in->units", "parameters");
  for (const auto& r : rows) {
    const auto shape = std::to_string(r.inputs) + "->" + std::to_string(r.units);
    std::printf("%-10s %-6s %-12s %12zu\n", r.name.c_str(), r.kind.c_str(), shape.c_str(), r.params);
    layers.push_back(
        {{"name", r.name}, {"kind", r.kind}, {"inputs", r.inputs}, {"units", r.units}, {"parameters", r.params}});
  }
  const auto total = param_count(cfg.model);
  std::printf("%-30s %12zu\n", "total", total);
  std::printf("%-30s %12zu  (published figure; the layer formulas above do not reproduce it)\n", "reported",
              kReportedParamCount);
  if (!g.out.empty()) {
    const auto out = require_out(g, "params");
    write_effective_config(out, cfg, "params", json::object());
    write_json(out / "params.json", {{"layers", layers},
                                     {"total", total},
                                     {"reported_total", kReportedParamCount},
                                     {"note", "reported_total is the published figure for this architecture; it does "
                                              "not follow from the per-layer formulas 4h(d+h+1) and out(in+1)"}});
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"EEG band-pretraining LSTM pipeline"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--config", g.config_path, "JSON run configuration");
  app.add_option("--seed", g.seed, "Run seed (overrides the config)");
  app.add_option("--out", g.out, "Output directory");
  app.add_option("--threads", g.threads, "Worker threads for parallel-safe stages")->check(CLI::PositiveNumber);

  std::vector<std::size_t> per_class;
  std::size_t participants = 10;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic EEG dataset");
  synth->add_option("--per-class", per_class, "Trials per class: left,high,right")->delimiter(',');
  synth->add_option("--participants", participants, "Number of participants")->check(CLI::PositiveNumber);

  std::string data, corpus, checkpoint, split, order, subset = "test";
  std::optional<std::size_t> epochs;

  auto* augment = app.add_subcommand("augment", "Build band-filtered copies of a dataset");
  augment->add_option("--data", data, "Dataset directory or manifest")->required();

  auto* train_cmd = app.add_subcommand("train", "Train from scratch on the raw training split");
  train_cmd->add_option("--data", data, "Dataset directory or manifest")->required();
  train_cmd->add_option("--epochs", epochs, "Epochs (overrides the config)");
  train_cmd->add_option("--split", split, "Split plan JSON (default: derived from the seed)");

  auto* pretrain = app.add_subcommand("pretrain", "Sequential band pretraining");
  pretrain->add_option("--corpus", corpus, "Corpus directory written by augment")->required();
  pretrain->add_option("--order", order, "Comma-separated band order (default: corpus order)");
  pretrain->add_option("--epochs", epochs, "Epochs per stage");
  pretrain->add_option("--split", split, "Split plan JSON");

  auto* finetune_cmd = app.add_subcommand("finetune", "Continue training a checkpoint on the raw data");
  finetune_cmd->add_option("--checkpoint", checkpoint, "Starting checkpoint")->required();
  finetune_cmd->add_option("--data", data, "Dataset directory or manifest")->required();
  finetune_cmd->add_option("--epochs", epochs, "Epochs");
  finetune_cmd->add_option("--split", split, "Split plan JSON");

  auto* eval = app.add_subcommand("eval", "Score a checkpoint");
  eval->add_option("--checkpoint", checkpoint, "Checkpoint to evaluate")->required();
  eval->add_option("--data", data, "Dataset directory or manifest")->required();
  eval->add_option("--split", split, "Split plan JSON");
  eval->add_option("--subset", subset, "test, train or all");

  auto* table2 = app.add_subcommand("table2", "Run the five-row pretraining comparison");
  table2->add_option("--data", data, "Dataset directory or manifest")->required();
  table2->add_option("--corpus", corpus, "Prebuilt corpus directory (default: build in memory)");
  table2->add_option("--split", split, "Split plan JSON");

  auto* params = app.add_subcommand("params", "Print the parameter count per layer");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*synth) return cmd_synth(g, per_class, participants);
    if (*augment) return cmd_augment(g, data);
    if (*train_cmd) return cmd_train(g, data, epochs, split);
    if (*pretrain) return cmd_pretrain(g, corpus, order, epochs, split);
    if (*finetune_cmd) return cmd_finetune(g, checkpoint, data, epochs, split);
    if (*eval) return cmd_eval(g, checkpoint, data, split, subset);
    if (*table2) return cmd_table2(g, data, corpus, split);
    if (*params) return cmd_params(g);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}
