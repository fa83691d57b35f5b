#pragma once

#include <string>

#include "birdxfer/grid.hpp"
#include "birdxfer/random.hpp"
#include "birdxfer/spectrogram.hpp"

namespace birdxfer {

enum class RangeTag { kRawGray, kUnit };
enum class PadMode { kWrap, kZero };

struct FloatImage {
  Grid<float> pixels;
  RangeTag tag = RangeTag::kRawGray;

  int rows() const { return pixels.rows; }
  int cols() const { return pixels.cols; }
};

struct AugmentConfig {
  double scale_min = 0.9;
  double scale_max = 1.1;
  int crop_rows = 256;
  int crop_cols = 256;
  double noise_max = 25.0;
  PadMode pad_mode = PadMode::kWrap;

  void validate() const;
  friend bool operator==(const AugmentConfig&, const AugmentConfig&) = default;
};

FloatImage to_float(const GraySpectrogram& image);

// Independent row/column factors drawn from [scale_min, scale_max] (rows
// first); bilinear resample to round(old * factor).
FloatImage random_scale(const GraySpectrogram& image, RandomSource& rng, const AugmentConfig& config = {});

// Pads an axis shorter than the crop (tiling or zeros), then draws the row
// origin and the column origin uniformly over valid positions.
FloatImage random_crop(const FloatImage& image, RandomSource& rng, const AugmentConfig& config = {});

// Fixed-origin crop with the same padding rule.
FloatImage crop_at(const FloatImage& image, int row_origin, int col_origin, int rows, int cols, PadMode pad);

// Adds i.i.d. Uniform[0, noise_max] to every pixel, unclamped. Rejects unit images.
FloatImage add_noise(const FloatImage& image, RandomSource& rng, const AugmentConfig& config = {});

// (x - min) / (max - min); constant images become all zeros.
FloatImage minmax_normalize(const FloatImage& image);

// scale -> crop -> noise -> normalize.
FloatImage training_view(const GraySpectrogram& image, RandomSource& rng, const AugmentConfig& config = {});

// crop -> normalize.
FloatImage validation_view(const GraySpectrogram& image, RandomSource& rng, const AugmentConfig& config = {});

PadMode parse_pad_mode(const std::string& s);
std::string to_string(PadMode mode);

}  // namespace birdxfer
