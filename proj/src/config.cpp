#include "birdxfer/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "birdxfer/error.hpp"

namespace birdxfer {

using nlohmann::json;

namespace {

const char* intensity_name(Intensity i) { return i == Intensity::kPower ? "power" : "magnitude"; }

Intensity parse_intensity(const std::string& s) {
  if (s == "magnitude") return Intensity::kMagnitude;
  if (s == "power") return Intensity::kPower;
  throw ConfigError("spectrogram.intensity must be magnitude or power, got '" + s + "'");
}

const char* pool_name(PoolKind k) { return k == PoolKind::kAverage ? "average" : "max"; }

PoolKind parse_pool(const std::string& s) {
  if (s == "max") return PoolKind::kMax;
  if (s == "average" || s == "avg") return PoolKind::kAverage;
  throw ConfigError("model.pooling must be max or average, got '" + s + "'");
}

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n\"'");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n\"'");
  return s.substr(first, last - first + 1);
}

double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(trim(v), &used);
    if (used != trim(v).size()) throw std::invalid_argument("trailing");
    return d;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
}

long long to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long i = std::stoll(trim(v), &used);
    if (used != trim(v).size()) throw std::invalid_argument("trailing");
    return i;
  } catch (const std::exception&) {
    throw ConfigError(key + ": expected an integer, got '" + v + "'");
  }
}

bool to_bool(const std::string& key, const std::string& v) {
  std::string s = trim(v);
  std::transform(s.begin(), s.end(), s.begin(), ::tolower);
  if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
  if (s == "false" || s == "0" || s == "no" || s == "off") return false;
  throw ConfigError(key + ": expected a boolean, got '" + v + "'");
}

std::vector<std::string> to_list(const std::string& v) {
  std::string s = trim(v);
  if (!s.empty() && s.front() == '[') s.erase(0, 1);
  if (!s.empty() && s.back() == ']') s.pop_back();
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
void read(const json& j, const char* key, T& dst) {
  if (j.contains(key)) dst = j.at(key).get<T>();
}

using Setter = std::function<void(RunConfig&, const std::string& key, const std::string& value)>;

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    auto path = [](std::filesystem::path RunConfig::*m) {
      return [m](RunConfig& c, const std::string&, const std::string& v) { c.*m = trim(v); };
    };
    t["data.manifest"] = path(&RunConfig::manifest);
    t["data.negatives"] = path(&RunConfig::negatives);
    t["data.audio_manifest"] = path(&RunConfig::audio_manifest);
    t["paths.pretrained"] = path(&RunConfig::pretrained);
    t["paths.base_checkpoint"] = path(&RunConfig::base_checkpoint);
    t["out_dir"] = path(&RunConfig::out_dir);

    t["spectrogram.sample_rate"] = [](RunConfig& c, auto& k, auto& v) { c.spectrogram.sample_rate = to_int(k, v); };
    t["spectrogram.frame_length"] = [](RunConfig& c, auto& k, auto& v) { c.spectrogram.frame_length = to_int(k, v); };
    t["spectrogram.hop"] = [](RunConfig& c, auto& k, auto& v) { c.spectrogram.hop = to_int(k, v); };
    t["spectrogram.target_peak"] = [](RunConfig& c, auto& k, auto& v) { c.spectrogram.target_peak = to_double(k, v); };
    t["spectrogram.intensity"] = [](RunConfig& c, auto&, auto& v) { c.spectrogram.intensity = parse_intensity(trim(v)); };
    t["spectrogram.log_base"] = [](RunConfig& c, auto&, auto& v) { c.spectrogram.log_base = trim(v); };
    t["spectrogram.output_rows"] = [](RunConfig& c, auto& k, auto& v) { c.spectrogram.output_rows = to_int(k, v); };

    t["augment.scale_min"] = [](RunConfig& c, auto& k, auto& v) { c.augment.scale_min = to_double(k, v); };
    t["augment.scale_max"] = [](RunConfig& c, auto& k, auto& v) { c.augment.scale_max = to_double(k, v); };
    t["augment.crop_rows"] = [](RunConfig& c, auto& k, auto& v) { c.augment.crop_rows = to_int(k, v); };
    t["augment.crop_cols"] = [](RunConfig& c, auto& k, auto& v) { c.augment.crop_cols = to_int(k, v); };
    t["augment.noise_max"] = [](RunConfig& c, auto& k, auto& v) { c.augment.noise_max = to_double(k, v); };
    t["augment.pad_mode"] = [](RunConfig& c, auto&, auto& v) { c.augment.pad_mode = parse_pad_mode(trim(v)); };

    t["model.backbone_width"] = [](RunConfig& c, auto& k, auto& v) { c.model.backbone.width = to_int(k, v); };
    t["model.backbone_blocks"] = [](RunConfig& c, auto& k, auto& v) {
      const auto items = to_list(v);
      if (items.size() != 4) throw ConfigError(k + ": expected 4 stage block counts");
      for (int i = 0; i < 4; ++i) c.model.backbone.blocks[i] = static_cast<int>(to_int(k, items[i]));
    };
    t["model.pooling"] = [](RunConfig& c, auto&, auto& v) { c.model.pooling = parse_pool(trim(v)); };
    t["model.dropout"] = [](RunConfig& c, auto& k, auto& v) { c.model.dropout = to_double(k, v); };

    t["schedule.initial_lr"] = [](RunConfig& c, auto& k, auto& v) { c.schedule.initial_lr = to_double(k, v); };
    t["schedule.batch_size"] = [](RunConfig& c, auto& k, auto& v) { c.schedule.batch_size = to_int(k, v); };
    t["schedule.plateau_patience"] = [](RunConfig& c, auto& k, auto& v) { c.schedule.plateau_patience = to_int(k, v); };
    t["schedule.abort_patience"] = [](RunConfig& c, auto& k, auto& v) { c.schedule.abort_patience = to_int(k, v); };
    t["schedule.restarts"] = [](RunConfig& c, auto& k, auto& v) { c.schedule.restarts = to_int(k, v); };
    t["schedule.restart_lr_scale"] = [](RunConfig& c, auto& k, auto& v) { c.schedule.restart_lr_scale = to_double(k, v); };
    t["schedule.lr_decay"] = [](RunConfig& c, auto& k, auto& v) { c.schedule.lr_decay = to_double(k, v); };
    t["schedule.weight_decay"] = [](RunConfig& c, auto& k, auto& v) { c.schedule.weight_decay = to_double(k, v); };
    t["schedule.max_epochs"] = [](RunConfig& c, auto& k, auto& v) { c.schedule.max_epochs = to_int(k, v); };
    t["schedule.min_delta"] = [](RunConfig& c, auto& k, auto& v) { c.schedule.min_delta = to_double(k, v); };

    auto split = [](std::vector<double> StageConfig::*, StageConfig RunConfig::*stage) {
      return [stage](RunConfig& c, const std::string& k, const std::string& v) {
        std::vector<double> f;
        for (const auto& item : to_list(v)) f.push_back(to_double(k, item));
        (c.*stage).split = f;
      };
    };
    t["base.negatives_per_epoch"] = [](RunConfig& c, auto& k, auto& v) { c.base.negatives_per_epoch = to_int(k, v); };
    t["base.split"] = split(&StageConfig::split, &RunConfig::base);
    t["base.expected_classes"] = [](RunConfig& c, auto& k, auto& v) { c.expected_base_classes = to_int(k, v); };
    t["target.negatives_per_epoch"] = [](RunConfig& c, auto& k, auto& v) { c.target.negatives_per_epoch = to_int(k, v); };
    t["target.split"] = split(&StageConfig::split, &RunConfig::target);
    t["validation_negative_ratio"] = [](RunConfig& c, auto& k, auto& v) { c.validation_negative_ratio = to_double(k, v); };

    t["folds.count"] = [](RunConfig& c, auto& k, auto& v) { c.folds = to_int(k, v); };
    t["folds.seeds"] = [](RunConfig& c, auto& k, auto& v) {
      c.fold_seeds.clear();
      for (const auto& item : to_list(v)) c.fold_seeds.push_back(static_cast<std::uint64_t>(to_int(k, item)));
    };
    t["folds.disjoint"] = [](RunConfig& c, auto& k, auto& v) { c.disjoint_folds = to_bool(k, v); };

    t["seed"] = [](RunConfig& c, auto& k, auto& v) { c.seed = static_cast<std::uint64_t>(to_int(k, v)); };
    t["jobs"] = [](RunConfig& c, auto& k, auto& v) { c.jobs = to_int(k, v); };
    t["strict"] = [](RunConfig& c, auto& k, auto& v) { c.strict = to_bool(k, v); };
    t["verbose"] = [](RunConfig& c, auto& k, auto& v) { c.verbose = to_bool(k, v); };
    t["threshold"] = [](RunConfig& c, auto& k, auto& v) { c.threshold = to_double(k, v); };
    return t;
  }();
  return table;
}

}  // namespace

json to_json(const SpectrogramConfig& c) {
  return {{"sample_rate", c.sample_rate}, {"frame_length", c.frame_length}, {"hop", c.hop},
          {"target_peak", c.target_peak}, {"intensity", intensity_name(c.intensity)},
          {"log_base", c.log_base},       {"output_rows", c.output_rows}};
}

json to_json(const AugmentConfig& c) {
  return {{"scale_min", c.scale_min}, {"scale_max", c.scale_max}, {"crop_rows", c.crop_rows},
          {"crop_cols", c.crop_cols}, {"noise_max", c.noise_max}, {"pad_mode", to_string(c.pad_mode)}};
}

json to_json(const ModelConfig& c) {
  return {{"num_classes", c.num_classes},
          {"backbone_width", c.backbone.width},
          {"backbone_blocks", c.backbone.blocks},
          {"bn_eps", c.backbone.bn_eps},
          {"bn_momentum", c.backbone.bn_momentum},
          {"pooling", pool_name(c.pooling)},
          {"dropout", c.dropout}};
}

json to_json(const TrainingSchedule& c) {
  return {{"initial_lr", c.initial_lr},
          {"batch_size", c.batch_size},
          {"plateau_patience", c.plateau_patience},
          {"abort_patience", c.abort_patience},
          {"restarts", c.restarts},
          {"restart_lr_scale", c.restart_lr_scale},
          {"lr_decay", c.lr_decay},
          {"weight_decay", c.weight_decay},
          {"max_epochs", c.max_epochs},
          {"min_delta", c.min_delta},
          {"adam_beta1", c.adam_beta1},
          {"adam_beta2", c.adam_beta2},
          {"adam_epsilon", c.adam_epsilon},
          {"bce_epsilon", c.bce_epsilon}};
}

SpectrogramConfig spectrogram_config_from_json(const json& j) {
  SpectrogramConfig c;
  read(j, "sample_rate", c.sample_rate);
  read(j, "frame_length", c.frame_length);
  read(j, "hop", c.hop);
  read(j, "target_peak", c.target_peak);
  read(j, "log_base", c.log_base);
  read(j, "output_rows", c.output_rows);
  if (j.contains("intensity")) c.intensity = parse_intensity(j.at("intensity").get<std::string>());
  return c;
}

AugmentConfig augment_config_from_json(const json& j) {
  AugmentConfig c;
  read(j, "scale_min", c.scale_min);
  read(j, "scale_max", c.scale_max);
  read(j, "crop_rows", c.crop_rows);
  read(j, "crop_cols", c.crop_cols);
  read(j, "noise_max", c.noise_max);
  if (j.contains("pad_mode")) c.pad_mode = parse_pad_mode(j.at("pad_mode").get<std::string>());
  return c;
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  read(j, "num_classes", c.num_classes);
  read(j, "backbone_width", c.backbone.width);
  read(j, "backbone_blocks", c.backbone.blocks);
  read(j, "bn_eps", c.backbone.bn_eps);
  read(j, "bn_momentum", c.backbone.bn_momentum);
  read(j, "dropout", c.dropout);
  if (j.contains("pooling")) c.pooling = parse_pool(j.at("pooling").get<std::string>());
  return c;
}

TrainingSchedule schedule_from_json(const json& j) {
  TrainingSchedule c;
  read(j, "initial_lr", c.initial_lr);
  read(j, "batch_size", c.batch_size);
  read(j, "plateau_patience", c.plateau_patience);
  read(j, "abort_patience", c.abort_patience);
  read(j, "restarts", c.restarts);
  read(j, "restart_lr_scale", c.restart_lr_scale);
  read(j, "lr_decay", c.lr_decay);
  read(j, "weight_decay", c.weight_decay);
  read(j, "max_epochs", c.max_epochs);
  read(j, "min_delta", c.min_delta);
  read(j, "adam_beta1", c.adam_beta1);
  read(j, "adam_beta2", c.adam_beta2);
  read(j, "adam_epsilon", c.adam_epsilon);
  read(j, "bce_epsilon", c.bce_epsilon);
  return c;
}

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto& table = setters();
  auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + key + "'");
  it->second(*this, key, value);
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [k, _] : setters()) out.push_back(k);
  return out;
}

void RunConfig::validate() const {
  spectrogram.validate();
  augment.validate();
  schedule.validate();
  if (model.backbone.width < 1) throw ConfigError("model.backbone_width must be positive");
  for (int b : model.backbone.blocks)
    if (b < 1) throw ConfigError("model.backbone_blocks entries must be positive");
  if (!(model.dropout >= 0.0 && model.dropout < 1.0)) throw ConfigError("model.dropout must be in [0, 1)");
  if (base.split.size() != 2) throw ConfigError("base.split needs 2 fractions (train, validation)");
  if (target.split.size() != 3) throw ConfigError("target.split needs 3 fractions (train, validation, test)");
  for (const auto* split : {&base.split, &target.split}) {
    double total = 0.0;
    for (double f : *split) {
      if (!(f > 0.0 && f < 1.0)) throw ConfigError("split fractions must lie in (0, 1)");
      total += f;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ConfigError("split fractions must sum to 1");
  }
  if (validation_negative_ratio < 0.0) throw ConfigError("validation_negative_ratio must be >= 0");
  if (folds < 1) throw ConfigError("folds.count must be >= 1");
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  if (threshold && !(*threshold > 0.0 && *threshold < 1.0)) throw ConfigError("threshold must be in (0, 1)");
}

json RunConfig::to_json() const {
  json j;
  j["data"] = {{"manifest", manifest.string()},
               {"negatives", negatives.string()},
               {"audio_manifest", audio_manifest.string()}};
  j["paths"] = {{"pretrained", pretrained.string()}, {"base_checkpoint", base_checkpoint.string()}};
  j["out_dir"] = out_dir.string();
  j["spectrogram"] = birdxfer::to_json(spectrogram);
  j["augment"] = birdxfer::to_json(augment);
  j["model"] = birdxfer::to_json(model);
  j["schedule"] = birdxfer::to_json(schedule);
  j["base"] = {{"negatives_per_epoch", base.negatives_per_epoch},
               {"split", base.split},
               {"expected_classes", expected_base_classes}};
  j["target"] = {{"negatives_per_epoch", target.negatives_per_epoch}, {"split", target.split}};
  j["validation_negative_ratio"] = validation_negative_ratio;
  j["folds"] = {{"count", folds}, {"seeds", fold_seeds}, {"disjoint", disjoint_folds}};
  j["seed"] = seed;
  j["jobs"] = jobs;
  j["strict"] = strict;
  j["verbose"] = verbose;
  j["threshold"] = threshold ? json(*threshold) : json(nullptr);
  j["device"] = device;
  j["spectrogram_config_hash"] = spectrogram.hash();
  return j;
}

std::string resolve_device(bool strict) {
  const char* env = std::getenv("BIRDXFER_DEVICE");
  if (!env || std::string(env).empty() || std::string(env) == "cpu") return "cpu";
  const std::string msg = std::string("BIRDXFER_DEVICE=") + env + " is not available; only cpu is supported";
  if (strict) throw ConfigError(msg);
  warn(msg + ", using cpu");
  return "cpu";
}

void write_resolved_config(const RunConfig& config, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const auto path = dir / "resolved_config.json";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << config.to_json().dump(2) << "\n";
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace birdxfer
