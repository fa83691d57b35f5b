#include "birdxfer/spectrogram.hpp"

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

#include "birdxfer/error.hpp"

namespace birdxfer {
namespace {

std::mutex g_plan_mutex;

struct FftwPlanDeleter {
  void operator()(fftw_plan_s* plan) const {
    std::lock_guard lock(g_plan_mutex);
    fftw_destroy_plan(plan);
  }
};
using PlanPtr = std::unique_ptr<fftw_plan_s, FftwPlanDeleter>;

struct FftwFree {
  void operator()(void* p) const { fftw_free(p); }
};

std::uint64_t fnv1a(const std::string& text) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace

double SpectrogramConfig::quantize_ceiling() const { return std::log1p(target_peak); }

std::string SpectrogramConfig::canonical_string() const {
  std::ostringstream os;
  os.precision(17);
  os << "sample_rate=" << sample_rate << ";frame_length=" << frame_length << ";hop=" << hop
     << ";target_peak=" << target_peak
     << ";intensity=" << (intensity == Intensity::kMagnitude ? "magnitude" : "power")
     << ";log_base=" << log_base << ";output_rows=" << output_rows;
  return os.str();
}

std::uint64_t SpectrogramConfig::hash() const { return fnv1a(canonical_string()); }

void SpectrogramConfig::validate() const {
  if (sample_rate <= 0) throw ConfigError("spectrogram.sample_rate must be positive");
  if (frame_length < 2 || hop < 1) throw ConfigError("spectrogram frame/hop invalid");
  if (!(target_peak > 0.0)) throw ConfigError("spectrogram.target_peak must be positive");
  if (log_base != "e") throw ConfigError("spectrogram.log_base: only natural log is supported");
  if (output_rows < 2) throw ConfigError("spectrogram.output_rows must be >= 2");
}

std::vector<double> hamming_window(int length) {
  if (length < 2) throw InvalidArgument("hamming_window: length must be >= 2");
  std::vector<double> w(static_cast<std::size_t>(length));
  for (int n = 0; n < length; ++n) {
    w[n] = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * n / (length - 1));
  }
  return w;
}

int stft_frame_count(std::size_t samples, int frame_length, int hop) {
  if (samples < static_cast<std::size_t>(frame_length)) return 0;
  return static_cast<int>((samples - frame_length) / hop) + 1;
}

RawSpectrogram stft_power(const AudioClip& clip, int frame_length, int hop, Intensity intensity) {
  if (clip.channels != 1) throw InvalidArgument("stft: clip must be mono");
  if (frame_length < 2 || hop < 1) throw InvalidArgument("stft: bad frame/hop");
  const int frames = stft_frame_count(clip.samples.size(), frame_length, hop);
  if (frames == 0) {
    throw InvalidArgument("stft: clip shorter than one frame (" + std::to_string(clip.samples.size()) +
                          " < " + std::to_string(frame_length) + " samples)");
  }
  const int bins = frame_length / 2 + 1;
  const auto window = hamming_window(frame_length);

  std::unique_ptr<double, FftwFree> in(static_cast<double*>(fftw_malloc(sizeof(double) * frame_length)));
  std::unique_ptr<fftw_complex, FftwFree> out(
      static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * bins)));
  PlanPtr plan;
  {
    // Only fftw_execute is thread safe.
    std::lock_guard lock(g_plan_mutex);
    plan.reset(fftw_plan_dft_r2c_1d(frame_length, in.get(), out.get(), FFTW_ESTIMATE));
  }
  if (!plan) throw Error(ErrorCode::kInternal, "stft: fftw plan creation failed");

  RawSpectrogram raw;
  raw.values = Grid<double>(bins, frames);
  raw.frame_length = frame_length;
  raw.hop = hop;
  raw.sample_rate = clip.sample_rate;
  for (int f = 0; f < frames; ++f) {
    const float* frame = clip.samples.data() + static_cast<std::size_t>(f) * hop;
    for (int n = 0; n < frame_length; ++n) in.get()[n] = window[n] * frame[n];
    fftw_execute(plan.get());
    for (int k = 0; k < bins; ++k) {
      const double re = out.get()[k][0];
      const double im = out.get()[k][1];
      const double power = re * re + im * im;
      raw.values.at(k, f) = intensity == Intensity::kPower ? power : std::sqrt(power);
    }
  }
  return raw;
}

RawSpectrogram normalize_peak(const RawSpectrogram& raw, double target_peak) {
  double peak = 0.0;
  for (double v : raw.values.data) {
    if (!std::isfinite(v) || v < 0.0) throw NumericError("normalize_peak: invalid intensity");
    peak = std::max(peak, v);
  }
  if (peak <= 0.0) throw ValidationError("silent spectrogram");
  RawSpectrogram out = raw;
  if (peak == target_peak) return out;
  const double scale = target_peak / peak;
  for (double& v : out.values.data) v *= scale;
  return out;
}

Grid<double> log_compress(const RawSpectrogram& raw) {
  Grid<double> out(raw.values.rows, raw.values.cols);
  for (std::size_t i = 0; i < raw.values.data.size(); ++i) {
    const double s = raw.values.data[i];
    if (s < 0.0) throw InvalidArgument("log_compress: negative intensity");
    out.data[i] = std::log1p(s);
  }
  return out;
}

int resized_columns(int cols, int source_rows, int target_rows) {
  const long scaled = std::lround(static_cast<double>(cols) * target_rows / source_rows);
  return static_cast<int>(std::max(1L, scaled));
}

Grid<double> resize_rows(const Grid<double>& grid, int target_rows) {
  if (grid.rows < 2 || grid.cols < 2) throw InvalidArgument("resize_rows: grid needs >= 2 rows and cols");
  return resize_bilinear<double>(grid, target_rows, resized_columns(grid.cols, grid.rows, target_rows));
}

GraySpectrogram quantize_gray(const Grid<double>& grid, double ceiling) {
  if (!(ceiling > 0.0)) throw InvalidArgument("quantize_gray: ceiling must be positive");
  GraySpectrogram out;
  out.pixels = Grid<std::uint8_t>(grid.rows, grid.cols);
  out.original_columns = grid.cols;
  for (int r = 0; r < grid.rows; ++r) {
    // Highest frequency goes to image row 0.
    const int dst_row = grid.rows - 1 - r;
    for (int c = 0; c < grid.cols; ++c) {
      const double v = grid.at(r, c);
      if (v < 0.0) throw InvalidArgument("quantize_gray: negative value");
      const long q = std::lround(v / ceiling * 255.0);
      out.pixels.at(dst_row, c) = static_cast<std::uint8_t>(std::clamp(q, 0L, 255L));
    }
  }
  return out;
}

GraySpectrogram make_spectrogram(const AudioClip& clip, const SpectrogramConfig& config) {
  config.validate();
  if (clip.sample_rate != config.sample_rate) {
    throw InvalidArgument("make_spectrogram: clip rate " + std::to_string(clip.sample_rate) +
                          " != " + std::to_string(config.sample_rate));
  }
  const auto raw = stft_power(clip, config.frame_length, config.hop, config.intensity);
  const auto normalized = normalize_peak(raw, config.target_peak);
  const auto compressed = log_compress(normalized);
  const auto resized = resize_rows(compressed, config.output_rows);
  auto gray = quantize_gray(resized, config.quantize_ceiling());
  gray.original_columns = raw.values.cols;
  gray.source_path = clip.source_path;
  gray.config_hash = config.hash();
  return gray;
}

}  // namespace birdxfer
