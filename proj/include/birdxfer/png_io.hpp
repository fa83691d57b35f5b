#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "birdxfer/spectrogram.hpp"

namespace birdxfer {

inline constexpr const char* kOrientationNote =
    "birdxfer spectrogram: rows are frequency, stored top-to-bottom with row 0 = highest "
    "frequency (lowest frequency renders at the bottom); columns are time frames.";

// 8-bit single-channel PNG with tEXt metadata. Output bytes depend only on the
// pixels and text, so rewriting the same image is byte-identical.
void write_gray_png(const std::filesystem::path& path, const Grid<std::uint8_t>& pixels,
                    const std::map<std::string, std::string>& text = {});

struct PngImage {
  Grid<std::uint8_t> pixels;
  std::map<std::string, std::string> text;
};
PngImage read_gray_png(const std::filesystem::path& path);

void save_spectrogram_png(const std::filesystem::path& path, const GraySpectrogram& image,
                          const SpectrogramConfig& config);
GraySpectrogram load_spectrogram_png(const std::filesystem::path& path);

}  // namespace birdxfer
