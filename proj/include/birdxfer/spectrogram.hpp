#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "birdxfer/audio_io.hpp"
#include "birdxfer/grid.hpp"

namespace birdxfer {

enum class Intensity { kMagnitude, kPower };

// Constants that define how audio becomes a gray image. Stored in PNG and
// checkpoint metadata so training and inference agree.
struct SpectrogramConfig {
  int sample_rate = kCanonicalSampleRate;
  int frame_length = 1024;
  int hop = 128;
  double target_peak = 1e8;
  Intensity intensity = Intensity::kMagnitude;
  std::string log_base = "e";
  int output_rows = 256;

  // ln(1 + target_peak): the fixed value that quantizes to 255.
  double quantize_ceiling() const;
  std::string canonical_string() const;
  std::uint64_t hash() const;
  void validate() const;

  friend bool operator==(const SpectrogramConfig&, const SpectrogramConfig&) = default;
};

// rows = frequency bins (row 0 = DC), cols = frames.
struct RawSpectrogram {
  Grid<double> values;
  int frame_length = 1024;
  int hop = 128;
  int sample_rate = kCanonicalSampleRate;
};

// 8-bit image, row 0 = highest frequency (image orientation).
struct GraySpectrogram {
  Grid<std::uint8_t> pixels;
  std::string source_path;
  int original_columns = 0;
  std::uint64_t config_hash = 0;

  int rows() const { return pixels.rows; }
  int cols() const { return pixels.cols; }
};

std::vector<double> hamming_window(int length);

int stft_frame_count(std::size_t samples, int frame_length, int hop);

RawSpectrogram stft_power(const AudioClip& clip, int frame_length = 1024, int hop = 128,
                          Intensity intensity = Intensity::kMagnitude);

// Throws ValidationError("silent spectrogram") when every value is zero.
RawSpectrogram normalize_peak(const RawSpectrogram& raw, double target_peak = 1e8);

Grid<double> log_compress(const RawSpectrogram& raw);

int resized_columns(int cols, int source_rows, int target_rows);
Grid<double> resize_rows(const Grid<double>& grid, int target_rows = 256);

GraySpectrogram quantize_gray(const Grid<double>& grid, double ceiling);

GraySpectrogram make_spectrogram(const AudioClip& clip, const SpectrogramConfig& config = {});

}  // namespace birdxfer
