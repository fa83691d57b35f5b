#pragma once

#include <optional>
#include <vector>

#include "birdxfer/augment.hpp"
#include "birdxfer/model.hpp"
#include "birdxfer/spectrogram.hpp"

namespace birdxfer {

// Column origins of size-wide windows stepped by hop, plus a final window
// flush with the right edge when the stepped ones leave a tail. Images
// narrower than size yield the single origin 0.
std::vector<int> window_origins(int cols, int size = 256, int hop = 128);

struct WindowSet {
  std::vector<FloatImage> windows;  // raw gray range, size x size
  std::vector<int> origins;
};

// Requires image.rows() == rows. Narrow images are wrap-padded to one window.
WindowSet window_image(const GraySpectrogram& image, int size = 256, int hop = 128, int rows = 256);

struct Prediction {
  std::vector<float> scores;                         // per class, max over windows
  std::vector<std::vector<float>> per_window_scores; // windows x classes
  std::vector<int> window_origins;
};

// Per-class maxima of per-window rows.
std::vector<float> aggregate_max(const std::vector<std::vector<float>>& per_window);

// Each window is min-max normalized and forwarded in eval mode.
Prediction predict_clip(Network<float>& net, const GraySpectrogram& image, int size = 256, int hop = 128);

// Argmax, lowest index on ties.
int classify(const std::vector<float>& scores);
// Every non-negative class scoring >= threshold; {negative_index} when none does.
std::vector<int> classify_multi(const std::vector<float>& scores, double threshold, int negative_index);

}  // namespace birdxfer
