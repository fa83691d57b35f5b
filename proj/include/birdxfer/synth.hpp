#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "birdxfer/audio_io.hpp"
#include "birdxfer/dataset.hpp"
#include "birdxfer/spectrogram.hpp"

namespace birdxfer {

// A sine with optional linear chirp, on/off pulsing and vibrato, plus
// optional white noise.
struct ToneSpec {
  double frequency_hz = 1000.0;
  double duration_s = 1.0;
  double amplitude = 0.5;
  double chirp_rate_hz_per_s = 0.0;
  double pulse_hz = 0.0;      // square gating, 50% duty
  double vibrato_hz = 0.0;
  double vibrato_depth_hz = 0.0;
  double noise_amplitude = 0.0;
  double phase = 0.0;
  std::uint64_t seed = 0;
  int sample_rate = kCanonicalSampleRate;

  // Highest instantaneous frequency reached during the clip.
  double max_frequency() const;
  void validate() const;
};

AudioClip synth_clip(const ToneSpec& spec);

// Band-limited-free white noise clip (negatives).
AudioClip synth_noise(double duration_s, double amplitude, std::uint64_t seed, int sample_rate = kCanonicalSampleRate);

enum class SynthPattern { kSteady, kPulsed, kChirp, kVibrato };
const char* to_string(SynthPattern p);

struct SynthOptions {
  int num_classes = 2;
  int per_class = 10;
  int negatives_per_positive = 2;
  std::uint64_t seed = 0;
  double duration_s = 1.0;
  bool write_audio = false;  // also write WAVs and an audio manifest
  std::string class_prefix = "species";
  SpectrogramConfig spectrogram{};
};

// Class c uses pattern c mod 4 in its own frequency band, with per-clip
// frequency/phase jitter and faint background noise.
ToneSpec synth_class_spec(int class_index, int num_classes, double duration_s, std::uint64_t seed);

struct SynthDataset {
  std::filesystem::path manifest;        // spectrogram manifest (positives + negatives)
  std::filesystem::path audio_manifest;  // empty unless write_audio
  DatasetManifest records;
};

SynthDataset synth_dataset(const std::filesystem::path& out_dir, const SynthOptions& options);

}  // namespace birdxfer
