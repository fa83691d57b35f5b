#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"

#include "birdxfer/augment.hpp"
#include "birdxfer/model.hpp"
#include "birdxfer/spectrogram.hpp"

namespace birdxfer {

inline constexpr std::uint32_t kArchiveFormatVersion = 1;

// Named float32 arrays plus a JSON metadata document.
//
// Layout (little endian):
//   "BXARCHV1"  u32 version  u64 json_len  json bytes
//   u32 count, then per entry: u32 name_len, name, u32 ndim, i64 dims[ndim],
//   f32 values[prod(dims)]
//   "BXEND\0\0\0"
struct ArrayEntry {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<float> values;
};

struct Archive {
  nlohmann::json metadata = nlohmann::json::object();
  std::vector<ArrayEntry> arrays;

  const ArrayEntry* find(const std::string& name) const;
};

// Written to <path>.tmp and renamed into place.
void write_archive(const std::filesystem::path& path, const Archive& archive);
Archive read_archive(const std::filesystem::path& path);

struct CheckpointMetadata {
  std::vector<std::string> class_names;
  SpectrogramConfig spectrogram{};
  AugmentConfig augment{};
  ModelConfig model{};
  InitInfo init{};
  std::string stage = "base";  // base | target
  nlohmann::json extra = nlohmann::json::object();
};

nlohmann::json to_json(const CheckpointMetadata& meta);
CheckpointMetadata metadata_from_json(const nlohmann::json& j);

void save_checkpoint(Network<float>& net, const CheckpointMetadata& meta, const std::filesystem::path& path);

struct LoadedModel {
  Network<float> net;
  CheckpointMetadata meta;
};
LoadedModel load_checkpoint(const std::filesystem::path& path);

// Compares the checkpoint's spectrogram constants with the active ones:
// mismatch throws ValidationError in strict mode and warns otherwise.
void check_spectrogram_config(const CheckpointMetadata& meta, const SpectrogramConfig& active, bool strict);

// Copies every backbone.* array from an archive (checkpoint or converted
// ImageNet weights) into net. Missing arrays and shape mismatches throw.
template <typename T>
void load_backbone_weights(Network<T>& net, const std::filesystem::path& path);

template <typename T>
Archive network_to_archive(Network<T>& net);
template <typename T>
void archive_to_network(const Archive& archive, Network<T>& net, bool backbone_only);

}  // namespace birdxfer
