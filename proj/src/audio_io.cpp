#include "birdxfer/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>
#include <numeric>

#include "birdxfer/error.hpp"

namespace birdxfer {
namespace {

constexpr std::uint16_t kFormatPcm = 1;
constexpr std::uint16_t kFormatFloat = 3;
constexpr std::uint16_t kFormatExtensible = 0xFFFE;

std::uint32_t read_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}
std::uint16_t read_u16(const std::uint8_t* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

float decode_sample(const std::uint8_t* p, std::uint16_t format, int bits) {
  if (format == kFormatFloat) {
    if (bits != 32) throw FormatError("unsupported codec: float" + std::to_string(bits));
    float v;
    std::uint32_t raw = read_u32(p);
    std::memcpy(&v, &raw, sizeof v);
    return v;
  }
  switch (bits) {
    case 8:
      return (static_cast<int>(p[0]) - 128) / 128.0f;
    case 16:
      return static_cast<std::int16_t>(read_u16(p)) / 32768.0f;
    case 24: {
      std::int32_t v = static_cast<std::int32_t>(p[0] | (p[1] << 8) | (p[2] << 16));
      if (v & 0x800000) v -= 0x1000000;
      return static_cast<float>(v / 8388608.0);
    }
    case 32:
      return static_cast<float>(static_cast<std::int32_t>(read_u32(p)) / 2147483648.0);
    default:
      throw FormatError("unsupported codec: pcm" + std::to_string(bits));
  }
}

// Kaiser-windowed sinc, tau in input samples.
double windowed_sinc(double tau, double cutoff, double half_width, double beta) {
  if (std::abs(tau) >= half_width) return 0.0;
  const double x = cutoff * tau;
  const double sinc = x == 0.0 ? 1.0 : std::sin(std::numbers::pi * x) / (std::numbers::pi * x);
  const double u = tau / half_width;
  const double window = std::cyl_bessel_i(0.0, beta * std::sqrt(1.0 - u * u)) /
                        std::cyl_bessel_i(0.0, beta);
  return cutoff * sinc * window;
}

}  // namespace

AudioClip decode_wav(std::span<const std::uint8_t> bytes, std::string source_path) {
  if (bytes.size() < 12 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0) {
    throw FormatError("unsupported codec: not a RIFF/WAVE stream: " + source_path);
  }
  std::uint16_t format = 0;
  int channels = 0;
  int sample_rate = 0;
  int bits = 0;
  bool have_fmt = false;
  const std::uint8_t* data = nullptr;
  std::size_t data_size = 0;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint8_t* chunk = bytes.data() + pos;
    std::size_t size = read_u32(chunk + 4);
    const std::size_t body = pos + 8;
    const std::size_t available = bytes.size() - body;
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      if (size < 16 || size > available) throw FormatError("malformed fmt chunk: " + source_path);
      const std::uint8_t* f = bytes.data() + body;
      format = read_u16(f);
      channels = read_u16(f + 2);
      sample_rate = static_cast<int>(read_u32(f + 4));
      bits = read_u16(f + 14);
      if (format == kFormatExtensible) {
        if (size < 40) throw FormatError("malformed extensible fmt chunk: " + source_path);
        format = read_u16(f + 24);
      }
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      // Streaming writers leave the size at 0 or 0xFFFFFFFF; clamp to what exists.
      data = bytes.data() + body;
      data_size = std::min(size, available);
      size = data_size;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw FormatError("missing fmt chunk: " + source_path);
  if (format != kFormatPcm && format != kFormatFloat) {
    throw FormatError("unsupported codec: format tag " + std::to_string(format) + " in " + source_path);
  }
  if (channels <= 0 || sample_rate <= 0 || bits % 8 != 0 || bits == 0) {
    throw FormatError("invalid wav header: " + source_path);
  }
  const std::size_t frame_bytes = static_cast<std::size_t>(channels) * (bits / 8);
  if (data == nullptr || data_size < frame_bytes) {
    throw FormatError("zero-length stream: " + source_path);
  }
  const std::size_t frames = data_size / frame_bytes;
  AudioClip clip;
  clip.channels = channels;
  clip.sample_rate = sample_rate;
  clip.source_path = std::move(source_path);
  clip.samples.resize(frames * channels);
  const std::size_t sample_bytes = bits / 8;
  for (std::size_t i = 0; i < clip.samples.size(); ++i) {
    const float v = decode_sample(data + i * sample_bytes, format, bits);
    if (!std::isfinite(v)) throw FormatError("non-finite sample in " + clip.source_path);
    clip.samples[i] = v;
  }
  return clip;
}

AudioClip decode_audio(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing file: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return decode_wav(bytes, path.string());
}

void write_wav(const std::filesystem::path& path, const AudioClip& clip, WavEncoding encoding) {
  if (clip.channels <= 0 || clip.sample_rate <= 0) throw InvalidArgument("write_wav: bad clip header");
  int bits = 16;
  std::uint16_t format = kFormatPcm;
  switch (encoding) {
    case WavEncoding::kPcm8: bits = 8; break;
    case WavEncoding::kPcm16: bits = 16; break;
    case WavEncoding::kPcm24: bits = 24; break;
    case WavEncoding::kFloat32: bits = 32; format = kFormatFloat; break;
  }
  const std::uint32_t data_size = static_cast<std::uint32_t>(clip.samples.size() * (bits / 8));
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_size);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_size);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, format);
  put_u16(out, static_cast<std::uint16_t>(clip.channels));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate));
  put_u32(out, static_cast<std::uint32_t>(clip.sample_rate * clip.channels * (bits / 8)));
  put_u16(out, static_cast<std::uint16_t>(clip.channels * (bits / 8)));
  put_u16(out, static_cast<std::uint16_t>(bits));
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_size);
  for (float s : clip.samples) {
    const double v = std::clamp(static_cast<double>(s), -1.0, 1.0);
    switch (encoding) {
      case WavEncoding::kPcm8:
        out.push_back(static_cast<std::uint8_t>(std::clamp(std::lround(v * 128.0) + 128, 0L, 255L)));
        break;
      case WavEncoding::kPcm16:
        put_u16(out, static_cast<std::uint16_t>(
                         static_cast<std::int16_t>(std::clamp(std::lround(v * 32768.0), -32768L, 32767L))));
        break;
      case WavEncoding::kPcm24: {
        const long q = std::clamp(std::lround(v * 8388608.0), -8388608L, 8388607L);
        const auto u = static_cast<std::uint32_t>(q);
        out.push_back(static_cast<std::uint8_t>(u));
        out.push_back(static_cast<std::uint8_t>(u >> 8));
        out.push_back(static_cast<std::uint8_t>(u >> 16));
        break;
      }
      case WavEncoding::kFloat32: {
        std::uint32_t raw;
        const float f = s;
        std::memcpy(&raw, &f, sizeof raw);
        put_u32(out, raw);
        break;
      }
    }
  }
  std::ofstream file(path, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot write " + path.string());
  file.write(reinterpret_cast<const char*>(out.data()), static_cast<std::streamsize>(out.size()));
  if (!file) throw IoError("write failed: " + path.string());
}

AudioClip mix_to_mono(const AudioClip& clip) {
  if (clip.channels < 1 || clip.samples.size() % clip.channels != 0) {
    throw InvalidArgument("mix_to_mono: malformed clip " + clip.source_path);
  }
  if (clip.channels == 1) return clip;
  AudioClip mono;
  mono.channels = 1;
  mono.sample_rate = clip.sample_rate;
  mono.source_path = clip.source_path;
  const std::size_t frames = clip.frames();
  mono.samples.resize(frames);
  for (std::size_t f = 0; f < frames; ++f) {
    double sum = 0.0;
    for (int c = 0; c < clip.channels; ++c) sum += clip.samples[f * clip.channels + c];
    mono.samples[f] = static_cast<float>(sum / clip.channels);
  }
  return mono;
}

AudioClip resample(const AudioClip& clip, int target_rate) {
  if (clip.channels != 1) throw InvalidArgument("resample: clip must be mono");
  if (target_rate <= 0) throw InvalidArgument("resample: target rate must be positive");
  if (clip.sample_rate <= 0) throw InvalidArgument("resample: bad source rate");
  if (clip.sample_rate == target_rate) return clip;

  constexpr double kZeroCrossings = 32.0;
  constexpr double kRolloff = 0.95;
  constexpr double kBeta = 8.6;

  const long g = std::gcd(static_cast<long>(clip.sample_rate), static_cast<long>(target_rate));
  const long up = target_rate / g;           // L
  const long down = clip.sample_rate / g;    // M
  const double cutoff = std::min(1.0, static_cast<double>(up) / down) * kRolloff;
  const double half_width = kZeroCrossings / cutoff;
  const long taps_each_side = static_cast<long>(std::ceil(half_width));
  const long n_in = static_cast<long>(clip.samples.size());
  const long n_out = (n_in * up + down - 1) / down;

  // One tap row per output phase; rows are normalized to unit DC gain.
  const bool tabulate = up <= 4096;
  const long row = 2 * taps_each_side;
  std::vector<double> table;
  auto fill_row = [&](long phase, double* dst) {
    const double frac = static_cast<double>(phase) / up;
    double sum = 0.0;
    for (long i = 0; i < row; ++i) {
      const long offset = i - taps_each_side + 1;  // input index relative to base
      dst[i] = windowed_sinc(frac - offset, cutoff, half_width, kBeta);
      sum += dst[i];
    }
    for (long i = 0; i < row; ++i) dst[i] /= sum;
  };
  if (tabulate) {
    table.resize(static_cast<std::size_t>(up * row));
    for (long p = 0; p < up; ++p) fill_row(p, table.data() + p * row);
  }
  std::vector<double> scratch(tabulate ? 0 : row);

  AudioClip out;
  out.channels = 1;
  out.sample_rate = target_rate;
  out.source_path = clip.source_path;
  out.samples.resize(static_cast<std::size_t>(n_out));
  for (long n = 0; n < n_out; ++n) {
    const long num = n * down;
    const long base = num / up;
    const long phase = num % up;
    const double* taps;
    if (tabulate) {
      taps = table.data() + phase * row;
    } else {
      fill_row(phase, scratch.data());
      taps = scratch.data();
    }
    double acc = 0.0;
    for (long i = 0; i < row; ++i) {
      const long j = base + i - taps_each_side + 1;
      if (j < 0 || j >= n_in) continue;
      acc += taps[i] * clip.samples[static_cast<std::size_t>(j)];
    }
    out.samples[static_cast<std::size_t>(n)] = static_cast<float>(acc);
  }
  return out;
}

AudioClip load_canonical(const std::filesystem::path& path) {
  return resample(mix_to_mono(decode_audio(path)), kCanonicalSampleRate);
}

}  // namespace birdxfer
