#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace birdxfer {

inline constexpr int kCanonicalSampleRate = 22050;

// Decoded waveform. Samples are interleaved when channels > 1.
struct AudioClip {
  std::vector<float> samples;
  int channels = 1;
  int sample_rate = kCanonicalSampleRate;
  std::string source_path;

  std::size_t frames() const {
    return channels > 0 ? samples.size() / static_cast<std::size_t>(channels) : 0;
  }
  double duration_seconds() const {
    return static_cast<double>(frames()) / sample_rate;
  }
};

enum class WavEncoding { kPcm8, kPcm16, kPcm24, kFloat32 };

// Reads a RIFF/WAVE file: PCM 8/16/24/32-bit and IEEE float32, including
// WAVE_FORMAT_EXTENSIBLE. Integer PCM is scaled by the signed maximum of the
// bit depth, so -full-scale maps to exactly -1.0.
AudioClip decode_audio(const std::filesystem::path& path);
AudioClip decode_wav(std::span<const std::uint8_t> bytes, std::string source_path = {});

void write_wav(const std::filesystem::path& path, const AudioClip& clip,
               WavEncoding encoding = WavEncoding::kPcm16);

// Per-frame arithmetic mean of the channels.
AudioClip mix_to_mono(const AudioClip& clip);

// Band-limited Kaiser-windowed sinc resampler (polyphase for rational ratios).
// A clip already at target_rate is returned unchanged.
AudioClip resample(const AudioClip& clip, int target_rate = kCanonicalSampleRate);

// decode -> mix_to_mono -> resample(kCanonicalSampleRate).
AudioClip load_canonical(const std::filesystem::path& path);

}  // namespace birdxfer
