#include "birdxfer/png_io.hpp"

#include <png.h>

#include <cstdio>
#include <cstring>
#include <memory>
#include <vector>

#include "birdxfer/error.hpp"

namespace birdxfer {
namespace {

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void png_error_handler(png_structp, png_const_charp msg) {
  throw FormatError(std::string("png: ") + msg);
}
void png_warning_handler(png_structp, png_const_charp) {}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

void write_gray_png(const std::filesystem::path& path, const Grid<std::uint8_t>& pixels,
                    const std::map<std::string, std::string>& text) {
  if (pixels.rows < 1 || pixels.cols < 1) throw InvalidArgument("write_gray_png: empty image");
  auto tmp = path;
  tmp += ".tmp";
  {
    FilePtr file(std::fopen(tmp.c_str(), "wb"));
    if (!file) throw IoError("cannot write " + path.string());
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler,
                                              png_warning_handler);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!info) {
      png_destroy_write_struct(&png, nullptr);
      throw Error(ErrorCode::kInternal, "png: out of memory");
    }
    try {
      png_init_io(png, file.get());
      png_set_IHDR(png, info, static_cast<png_uint_32>(pixels.cols), static_cast<png_uint_32>(pixels.rows), 8,
                   PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
                   PNG_FILTER_TYPE_DEFAULT);
      std::vector<png_text> entries;
      std::vector<std::string> keys, values;
      keys.reserve(text.size());
      values.reserve(text.size());
      for (const auto& [k, v] : text) {
        keys.push_back(k);
        values.push_back(v);
      }
      for (std::size_t i = 0; i < keys.size(); ++i) {
        png_text t{};
        t.compression = PNG_TEXT_COMPRESSION_NONE;
        t.key = keys[i].data();
        t.text = values[i].data();
        t.text_length = values[i].size();
        entries.push_back(t);
      }
      if (!entries.empty()) png_set_text(png, info, entries.data(), static_cast<int>(entries.size()));
      png_write_info(png, info);
      for (int r = 0; r < pixels.rows; ++r) {
        png_write_row(png, const_cast<png_bytep>(pixels.data.data() + static_cast<std::size_t>(r) * pixels.cols));
      }
      png_write_end(png, nullptr);
    } catch (...) {
      png_destroy_write_struct(&png, &info);
      std::filesystem::remove(tmp);
      throw;
    }
    png_destroy_write_struct(&png, &info);
    if (std::fflush(file.get()) != 0) throw IoError("write failed: " + path.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot rename into " + path.string() + ": " + ec.message());
}

PngImage read_gray_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError("missing file: " + path.string());
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw FormatError("not a PNG file: " + path.string());
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_error_handler,
                                           png_warning_handler);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw Error(ErrorCode::kInternal, "png: out of memory");
  }
  PngImage image;
  try {
    png_init_io(png, file.get());
    png_set_sig_bytes(png, 8);
    png_read_info(png, info);
    const auto width = png_get_image_width(png, info);
    const auto height = png_get_image_height(png, info);
    const int color = png_get_color_type(png, info);
    const int depth = png_get_bit_depth(png, info);
    if (depth == 16) png_set_strip_16(png);
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    if (color == PNG_COLOR_TYPE_RGB || color == PNG_COLOR_TYPE_RGB_ALPHA || color == PNG_COLOR_TYPE_PALETTE) {
      png_set_rgb_to_gray_fixed(png, 1, -1, -1);
    }
    png_read_update_info(png, info);
    image.pixels = Grid<std::uint8_t>(static_cast<int>(height), static_cast<int>(width));
    for (png_uint_32 r = 0; r < height; ++r) {
      png_read_row(png, image.pixels.data.data() + static_cast<std::size_t>(r) * width, nullptr);
    }
    png_read_end(png, info);
    png_textp texts = nullptr;
    int count = 0;
    png_get_text(png, info, &texts, &count);
    for (int i = 0; i < count; ++i) {
      image.text[texts[i].key] = std::string(texts[i].text, texts[i].text_length);
    }
  } catch (...) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw;
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return image;
}

void save_spectrogram_png(const std::filesystem::path& path, const GraySpectrogram& image,
                          const SpectrogramConfig& config) {
  write_gray_png(path, image.pixels,
                 {{"Comment", kOrientationNote},
                  {"birdxfer.spectrogram", config.canonical_string()},
                  {"birdxfer.config_hash", hex64(config.hash())},
                  {"birdxfer.original_columns", std::to_string(image.original_columns)}});
}

GraySpectrogram load_spectrogram_png(const std::filesystem::path& path) {
  auto png = read_gray_png(path);
  GraySpectrogram out;
  out.pixels = std::move(png.pixels);
  out.source_path = path.string();
  out.original_columns = out.pixels.cols;
  if (auto it = png.text.find("birdxfer.config_hash"); it != png.text.end()) {
    out.config_hash = std::stoull(it->second, nullptr, 16);
  }
  if (auto it = png.text.find("birdxfer.original_columns"); it != png.text.end()) {
    out.original_columns = std::stoi(it->second);
  }
  return out;
}

}  // namespace birdxfer
