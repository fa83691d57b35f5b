#include "birdxfer/augment.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "birdxfer/error.hpp"

namespace birdxfer {

void AugmentConfig::validate() const {
  if (!(scale_min > 0.0 && scale_min <= scale_max)) throw ConfigError("augment scale range invalid");
  if (crop_rows < 1 || crop_cols < 1) throw ConfigError("augment crop size invalid");
  if (noise_max < 0.0) throw ConfigError("augment.noise_max must be >= 0");
}

FloatImage to_float(const GraySpectrogram& image) {
  FloatImage out;
  out.pixels = Grid<float>(image.rows(), image.cols());
  std::transform(image.pixels.data.begin(), image.pixels.data.end(), out.pixels.data.begin(),
                 [](std::uint8_t v) { return static_cast<float>(v); });
  return out;
}

FloatImage random_scale(const GraySpectrogram& image, RandomSource& rng, const AugmentConfig& config) {
  if (image.rows() < 2 || image.cols() < 2) throw InvalidArgument("random_scale: image must be at least 2x2");
  const double row_factor = rng.uniform(config.scale_min, config.scale_max);
  const double col_factor = rng.uniform(config.scale_min, config.scale_max);
  const int rows = std::max(1, static_cast<int>(std::lround(image.rows() * row_factor)));
  const int cols = std::max(1, static_cast<int>(std::lround(image.cols() * col_factor)));
  FloatImage out;
  out.tag = RangeTag::kRawGray;
  out.pixels = resize_bilinear<float>(image.pixels, rows, cols);
  return out;
}

FloatImage crop_at(const FloatImage& image, int row_origin, int col_origin, int rows, int cols, PadMode pad) {
  if (image.rows() < 1 || image.cols() < 1) throw InvalidArgument("crop: empty image");
  const int src_rows = std::max(image.rows(), rows);
  const int src_cols = std::max(image.cols(), cols);
  if (row_origin < 0 || col_origin < 0 || row_origin + rows > src_rows || col_origin + cols > src_cols) {
    throw InvalidArgument("crop: window outside padded image");
  }
  FloatImage out;
  out.tag = image.tag;
  out.pixels = Grid<float>(rows, cols);
  for (int r = 0; r < rows; ++r) {
    const int pr = row_origin + r;
    const bool row_pad = pr >= image.rows();
    const int sr = pr % image.rows();
    for (int c = 0; c < cols; ++c) {
      const int pc = col_origin + c;
      const bool col_pad = pc >= image.cols();
      if (pad == PadMode::kZero && (row_pad || col_pad)) {
        out.pixels.at(r, c) = 0.0f;
      } else {
        out.pixels.at(r, c) = image.pixels.at(sr, pc % image.cols());
      }
    }
  }
  return out;
}

FloatImage random_crop(const FloatImage& image, RandomSource& rng, const AugmentConfig& config) {
  const int padded_rows = std::max(image.rows(), config.crop_rows);
  const int padded_cols = std::max(image.cols(), config.crop_cols);
  const auto r0 = static_cast<int>(rng.integer(0, padded_rows - config.crop_rows));
  const auto c0 = static_cast<int>(rng.integer(0, padded_cols - config.crop_cols));
  return crop_at(image, r0, c0, config.crop_rows, config.crop_cols, config.pad_mode);
}

FloatImage add_noise(const FloatImage& image, RandomSource& rng, const AugmentConfig& config) {
  if (image.tag != RangeTag::kRawGray) {
    throw InvalidArgument("add_noise: expects a raw-gray image (noise precedes normalization)");
  }
  FloatImage out = image;
  for (float& v : out.pixels.data) v += static_cast<float>(rng.uniform(0.0, config.noise_max));
  return out;
}

FloatImage minmax_normalize(const FloatImage& image) {
  FloatImage out;
  out.tag = RangeTag::kUnit;
  out.pixels = Grid<float>(image.rows(), image.cols());
  if (image.pixels.data.empty()) return out;
  const auto [lo_it, hi_it] = std::minmax_element(image.pixels.data.begin(), image.pixels.data.end());
  const double lo = *lo_it;
  const double hi = *hi_it;
  if (!std::isfinite(lo) || !std::isfinite(hi)) throw NumericError("minmax_normalize: non-finite pixel");
  if (hi == lo) return out;
  const double range = hi - lo;
  for (std::size_t i = 0; i < image.pixels.data.size(); ++i) {
    const double v = image.pixels.data[i];
    // Pin the extremes so min == 0 and max == 1 exactly.
    out.pixels.data[i] = v == hi ? 1.0f : static_cast<float>((v - lo) / range);
  }
  return out;
}

FloatImage training_view(const GraySpectrogram& image, RandomSource& rng, const AugmentConfig& config) {
  auto scaled = random_scale(image, rng, config);
  auto cropped = random_crop(scaled, rng, config);
  auto noisy = add_noise(cropped, rng, config);
  return minmax_normalize(noisy);
}

FloatImage validation_view(const GraySpectrogram& image, RandomSource& rng, const AugmentConfig& config) {
  return minmax_normalize(random_crop(to_float(image), rng, config));
}

PadMode parse_pad_mode(const std::string& s) {
  if (s == "wrap") return PadMode::kWrap;
  if (s == "zero") return PadMode::kZero;
  throw ConfigError("unknown pad mode '" + s + "' (wrap | zero)");
}

std::string to_string(PadMode mode) { return mode == PadMode::kWrap ? "wrap" : "zero"; }

}  // namespace birdxfer
