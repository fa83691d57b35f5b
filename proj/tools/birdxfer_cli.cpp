// birdxfer command-line front end. Everything goes through the C API.
#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "birdxfer/birdxfer.h"

namespace {

// 0 ok, 1 validation failure, 2 I/O or configuration failure.
int exit_code(bx_status s) {
  switch (s) {
    case BX_OK: return 0;
    case BX_ERR_VALIDATION:
    case BX_ERR_INVALID_ARGUMENT:
    case BX_ERR_NUMERIC: return 1;
    default: return 2;
  }
}

int report(bx_status s) {
  if (s != BX_OK) std::fprintf(stderr, "error: %s\n", bx_last_error());
  return exit_code(s);
}

struct Owned {
  char* p = nullptr;
  ~Owned() { bx_string_free(p); }
};

struct ConfigHandle {
  bx_config* c = nullptr;
  ~ConfigHandle() { bx_config_destroy(c); }
};

// Items of a TOML-style file as dotted keys. Arrays arrive as one input per
// element and are re-joined.
bx_status apply_config_file(bx_config* cfg, const std::string& path) {
  std::vector<CLI::ConfigItem> items;
  try {
    items = CLI::ConfigTOML().from_file(path);
  } catch (const CLI::Error& e) {
    std::fprintf(stderr, "error: cannot read config %s: %s\n", path.c_str(), e.what());
    return BX_ERR_CONFIG;
  }
  for (const auto& item : items) {
    if (item.name == "++" || item.name == "--" || item.name.empty()) continue;
    std::string value;
    for (std::size_t i = 0; i < item.inputs.size(); ++i) value += (i ? "," : "") + item.inputs[i];
    if (item.inputs.size() > 1) value = "[" + value + "]";
    if (auto s = bx_config_set(cfg, item.fullname().c_str(), value.c_str()); s != BX_OK) return s;
  }
  return BX_OK;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Spectrogram transfer-learning pipeline for birdcall classification"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::vector<std::string> overrides;
  std::string seed, jobs, out_dir;
  bool strict = false, quiet = false;
  app.add_option("--config", config_path, "TOML key/value config file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "root random seed");
  app.add_option("--jobs", jobs, "worker threads for prepare");
  app.add_flag("--strict", strict, "turn config mismatches into errors");
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_option("--set", overrides, "key=value config override (repeatable)");
  app.add_flag("--quiet", quiet, "no progress lines or warnings");

  // Subcommand flags are collected as key/value pairs applied last.
  std::vector<std::pair<std::string, std::string>> flags;
  auto keyed = [&flags](CLI::App* sub, const std::string& name, const std::string& key, const std::string& help) {
    sub->add_option_function<std::string>(
        name, [&flags, key](const std::string& v) { flags.emplace_back(key, v); }, help);
  };

  auto* prepare = app.add_subcommand("prepare", "audio manifest -> spectrogram PNGs + manifest");
  keyed(prepare, "--audio-manifest", "data.audio_manifest", "CSV of audio_path,species,role");

  auto* train_base = app.add_subcommand("train-base", "train the base classifier");
  keyed(train_base, "--manifest", "data.manifest", "spectrogram manifest");
  keyed(train_base, "--negatives", "data.negatives", "separate negatives manifest");
  keyed(train_base, "--pretrained", "paths.pretrained", "converted ImageNet backbone archive");

  auto* transfer = app.add_subcommand("transfer", "head swap + repeated target training and testing");
  keyed(transfer, "--base-checkpoint", "paths.base_checkpoint", "checkpoint from train-base");
  keyed(transfer, "--manifest", "data.manifest", "target spectrogram manifest");
  keyed(transfer, "--negatives", "data.negatives", "separate negatives manifest");
  keyed(transfer, "--folds", "folds.count", "number of folds");
  bool single_fold = false, disjoint = false;
  transfer->add_flag("--single-fold", single_fold, "run only the first fold");
  transfer->add_flag("--disjoint", disjoint, "disjoint k-fold partitions instead of random resplits");

  auto* predict = app.add_subcommand("predict", "classify PNG or WAV files, one JSON line each");
  std::string checkpoint;
  std::vector<std::string> inputs;
  predict->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  keyed(predict, "--threshold", "threshold", "multi-label mode threshold in (0, 1)");
  predict->add_option("inputs", inputs, "PNG or WAV paths")->required();

  auto* evaluate = app.add_subcommand("evaluate", "accuracy and confusion matrix of a checkpoint on a manifest");
  evaluate->add_option("--checkpoint", checkpoint, "trained checkpoint")->required();
  keyed(evaluate, "--manifest", "data.manifest", "spectrogram manifest");
  keyed(evaluate, "--negatives", "data.negatives", "separate negatives manifest");

  auto* synth = app.add_subcommand("synth", "write a synthetic tone dataset");
  int classes = 2, per_class = 10;
  double duration = 1.0;
  bool audio = false;
  synth->add_option("--classes", classes, "number of tone classes")->check(CLI::Range(2, 64));
  synth->add_option("--per-class", per_class, "clips per class")->check(CLI::PositiveNumber);
  synth->add_option("--duration", duration, "clip length in seconds")->check(CLI::PositiveNumber);
  synth->add_flag("--audio", audio, "also write WAV files and an audio manifest");

  app.add_subcommand("keys", "list accepted config keys");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (quiet) bx_set_quiet(1);
  ConfigHandle cfg;
  if (auto s = bx_config_create(&cfg.c); s != BX_OK) return report(s);
  if (!config_path.empty()) {
    if (auto s = apply_config_file(cfg.c, config_path); s != BX_OK) return report(s);
  }
  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::fprintf(stderr, "error: --set expects key=value, got '%s'\n", kv.c_str());
      return 2;
    }
    if (auto s = bx_config_set(cfg.c, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()); s != BX_OK) {
      return report(s);
    }
  }
  if (!seed.empty()) flags.emplace_back("seed", seed);
  if (!jobs.empty()) flags.emplace_back("jobs", jobs);
  if (!out_dir.empty()) flags.emplace_back("out_dir", out_dir);
  if (strict) flags.emplace_back("strict", "true");
  if (quiet) flags.emplace_back("verbose", "false");
  if (single_fold) flags.emplace_back("folds.count", "1");
  if (disjoint) flags.emplace_back("folds.disjoint", "true");
  for (const auto& [k, v] : flags) {
    if (auto s = bx_config_set(cfg.c, k.c_str(), v.c_str()); s != BX_OK) return report(s);
  }

  if (app.got_subcommand("keys")) {
    Owned keys;
    if (auto s = bx_config_keys(&keys.p); s != BX_OK) return report(s);
    std::fputs(keys.p, stdout);
    return 0;
  }
  if (*prepare) {
    size_t written = 0, skipped = 0;
    return report(bx_prepare(cfg.c, &written, &skipped));
  }
  if (*train_base) {
    Owned path;
    const auto s = bx_train_base(cfg.c, &path.p);
    if (s == BX_OK && !quiet) std::printf("checkpoint=%s\n", path.p);
    return report(s);
  }
  if (*transfer) {
    Owned path;
    const auto s = bx_transfer(cfg.c, &path.p);
    if (s == BX_OK && !quiet) std::printf("report=%s\n", path.p);
    return report(s);
  }
  if (*predict) {
    bx_model* model = nullptr;
    if (auto s = bx_model_load(checkpoint.c_str(), cfg.c, &model); s != BX_OK) return report(s);
    int code = 0;
    for (const auto& in : inputs) {
      Owned line;
      const auto s = bx_model_predict_file(model, in.c_str(), &line.p);
      if (s != BX_OK) {
        code = report(s);
        break;
      }
      std::printf("%s\n", line.p);
    }
    bx_model_destroy(model);
    return code;
  }
  if (*evaluate) {
    double acc = 0.0;
    return report(bx_evaluate(cfg.c, checkpoint.c_str(), &acc));
  }
  if (*synth) {
    Owned manifest;
    const std::string dir = out_dir.empty() ? "synth" : out_dir;
    const auto s = bx_synth_dataset(dir.c_str(), classes, per_class, seed.empty() ? 0 : std::stoull(seed), duration,
                                    audio ? 1 : 0, &manifest.p);
    if (s == BX_OK && !quiet) std::printf("manifest=%s\n", manifest.p);
    return report(s);
  }
  return 2;
}
