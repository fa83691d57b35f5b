#pragma once

#include <random>

#include "birdxfer/dataset.hpp"
#include "birdxfer/model.hpp"
#include "birdxfer/png_io.hpp"
#include "helpers.hpp"

namespace bxtest {

// Small gray images: class c is a bright horizontal band whose row depends on
// c, negatives are plain noise.
inline birdxfer::DatasetManifest tiny_dataset(const std::filesystem::path& dir, int classes, int per_class,
                                              int negatives, int rows = 64, int cols = 80, std::uint64_t seed = 1) {
  using namespace birdxfer;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> noise(0, 60);
  std::vector<SampleRecord> records;
  auto emit = [&](const std::string& name, int band, const std::string& species, Role role) {
    GraySpectrogram g;
    g.pixels = Grid<std::uint8_t>(rows, cols);
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        int v = noise(rng);
        if (band >= 0 && std::abs(r - band) <= 2) v += 180;
        g.pixels.at(r, c) = static_cast<std::uint8_t>(std::min(v, 255));
      }
    g.original_columns = cols;
    const auto path = dir / (name + ".png");
    save_spectrogram_png(path, g, SpectrogramConfig{});
    records.push_back({path.string(), 0, role, species});
  };
  for (int k = 0; k < classes; ++k)
    for (int i = 0; i < per_class; ++i)
      emit("c" + std::to_string(k) + "_" + std::to_string(i), (k + 1) * rows / (classes + 1), "sp" + std::to_string(k),
           Role::kPositive);
  for (int i = 0; i < negatives; ++i) emit("n_" + std::to_string(i), -1, "", Role::kNegative);
  return manifest_from_records(std::move(records));
}

inline birdxfer::ModelConfig tiny_model(int classes, int width = 2) {
  birdxfer::ModelConfig cfg;
  cfg.num_classes = classes;
  cfg.backbone.width = width;
  cfg.backbone.blocks = {1, 1, 1, 1};
  return cfg;
}

}  // namespace bxtest
