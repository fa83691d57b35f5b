#include "birdxfer/synth.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>

#include "birdxfer/error.hpp"
#include "birdxfer/png_io.hpp"
#include "birdxfer/random.hpp"

namespace birdxfer {

double ToneSpec::max_frequency() const {
  const double end = frequency_hz + chirp_rate_hz_per_s * duration_s;
  return std::max(frequency_hz, end) + std::abs(vibrato_depth_hz);
}

void ToneSpec::validate() const {
  const double nyquist = sample_rate / 2.0;
  if (sample_rate <= 0) throw InvalidArgument("tone: sample_rate must be positive");
  if (!(frequency_hz > 0.0)) throw InvalidArgument("tone: frequency must be positive");
  if (max_frequency() >= nyquist) {
    throw InvalidArgument("tone: frequency " + std::to_string(max_frequency()) + " Hz reaches Nyquist " +
                          std::to_string(nyquist) + " Hz");
  }
  if (frequency_hz + chirp_rate_hz_per_s * duration_s - std::abs(vibrato_depth_hz) <= 0.0) {
    throw InvalidArgument("tone: chirp/vibrato drives the frequency to zero");
  }
  if (!(duration_s > 0.0)) throw InvalidArgument("tone: duration must be positive");
  if (amplitude < 0.0 || noise_amplitude < 0.0) throw InvalidArgument("tone: amplitudes must be >= 0");
}

AudioClip synth_clip(const ToneSpec& spec) {
  spec.validate();
  AudioClip clip;
  clip.sample_rate = spec.sample_rate;
  clip.channels = 1;
  const auto n = static_cast<std::size_t>(std::llround(spec.duration_s * spec.sample_rate));
  clip.samples.resize(n);
  Rng rng(mix_seed({spec.seed, 0x6e6f6973ull}));
  const double two_pi = 2.0 * std::numbers::pi;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / spec.sample_rate;
    // Phase is the integral of the instantaneous frequency.
    double phase = spec.phase + two_pi * (spec.frequency_hz * t + 0.5 * spec.chirp_rate_hz_per_s * t * t);
    if (spec.vibrato_hz > 0.0) {
      phase -= spec.vibrato_depth_hz / spec.vibrato_hz * std::cos(two_pi * spec.vibrato_hz * t) -
               spec.vibrato_depth_hz / spec.vibrato_hz;
    }
    double gate = 1.0;
    if (spec.pulse_hz > 0.0) gate = std::fmod(t * spec.pulse_hz, 1.0) < 0.5 ? 1.0 : 0.0;
    double v = spec.amplitude * gate * std::sin(phase);
    if (spec.noise_amplitude > 0.0) v += rng.uniform(-spec.noise_amplitude, spec.noise_amplitude);
    clip.samples[i] = static_cast<float>(v);
  }
  return clip;
}

AudioClip synth_noise(double duration_s, double amplitude, std::uint64_t seed, int sample_rate) {
  if (!(duration_s > 0.0) || amplitude < 0.0) throw InvalidArgument("synth_noise: bad duration or amplitude");
  AudioClip clip;
  clip.sample_rate = sample_rate;
  const auto n = static_cast<std::size_t>(std::llround(duration_s * sample_rate));
  clip.samples.resize(n);
  Rng rng(mix_seed({seed, 0x6e6567ull}));
  // A one-pole low-pass with a random coefficient varies the noise colour.
  const double a = rng.uniform(0.0, 0.9);
  double y = 0.0;
  for (auto& s : clip.samples) {
    y = a * y + (1.0 - a) * rng.uniform(-1.0, 1.0);
    s = static_cast<float>(amplitude * y);
  }
  return clip;
}

const char* to_string(SynthPattern p) {
  switch (p) {
    case SynthPattern::kSteady: return "steady";
    case SynthPattern::kPulsed: return "pulsed";
    case SynthPattern::kChirp: return "chirp";
    case SynthPattern::kVibrato: return "vibrato";
  }
  return "?";
}

ToneSpec synth_class_spec(int class_index, int num_classes, double duration_s, std::uint64_t seed) {
  if (num_classes < 2) throw InvalidArgument("synth: need at least 2 classes");
  Rng rng(seed);
  ToneSpec spec;
  spec.duration_s = duration_s;
  spec.seed = seed;
  // Bands span 700 Hz .. ~8 kHz.
  const double band = 7000.0 / num_classes;
  const double centre = 700.0 + band * (class_index + 0.5);
  spec.frequency_hz = centre * rng.uniform(0.97, 1.03);
  spec.amplitude = rng.uniform(0.3, 0.8);
  spec.phase = rng.uniform(0.0, 2.0 * std::numbers::pi);
  spec.noise_amplitude = 0.01;
  switch (static_cast<SynthPattern>(class_index % 4)) {
    case SynthPattern::kSteady:
      break;
    case SynthPattern::kPulsed:
      spec.pulse_hz = rng.uniform(7.0, 9.0);
      break;
    case SynthPattern::kChirp:
      spec.pulse_hz = rng.uniform(3.5, 4.5);
      spec.chirp_rate_hz_per_s = std::min(0.4 * band, 1500.0) / duration_s;
      spec.frequency_hz -= 0.5 * spec.chirp_rate_hz_per_s * duration_s;
      break;
    case SynthPattern::kVibrato:
      spec.vibrato_hz = rng.uniform(5.0, 7.0);
      spec.vibrato_depth_hz = std::min(0.25 * band, 400.0);
      break;
  }
  return spec;
}

SynthDataset synth_dataset(const std::filesystem::path& out_dir, const SynthOptions& options) {
  if (options.num_classes < 2) throw InvalidArgument("synth_dataset: num_classes must be >= 2");
  if (options.per_class < 1) throw InvalidArgument("synth_dataset: per_class must be >= 1");
  std::filesystem::create_directories(out_dir / "png");
  if (options.write_audio) std::filesystem::create_directories(out_dir / "wav");

  std::vector<SampleRecord> images, audio;
  char name[64];
  auto emit = [&](const AudioClip& clip, const std::string& stem, const std::string& species, Role role) {
    const auto png = out_dir / "png" / (stem + ".png");
    save_spectrogram_png(png, make_spectrogram(clip, options.spectrogram), options.spectrogram);
    images.push_back({png.string(), 0, role, species});
    if (options.write_audio) {
      const auto wav = out_dir / "wav" / (stem + ".wav");
      write_wav(wav, clip, WavEncoding::kPcm16);
      audio.push_back({wav.string(), 0, role, species});
    }
  };

  for (int c = 0; c < options.num_classes; ++c) {
    std::snprintf(name, sizeof name, "%s_%02d", options.class_prefix.c_str(), c);
    const std::string species = name;
    for (int i = 0; i < options.per_class; ++i) {
      const auto seed = mix_seed({options.seed, static_cast<std::uint64_t>(c), static_cast<std::uint64_t>(i)});
      const auto clip = synth_clip(synth_class_spec(c, options.num_classes, options.duration_s, seed));
      std::snprintf(name, sizeof name, "%s_%03d", species.c_str(), i);
      emit(clip, name, species, Role::kPositive);
    }
  }
  const int negatives = options.num_classes * options.per_class * options.negatives_per_positive;
  for (int i = 0; i < negatives; ++i) {
    const auto seed = mix_seed({options.seed, 0x6e656761ull, static_cast<std::uint64_t>(i)});
    Rng rng(seed);
    const auto clip = synth_noise(options.duration_s, rng.uniform(0.05, 0.5), seed);
    std::snprintf(name, sizeof name, "noise_%04d", i);
    emit(clip, name, kNegativeClassName, Role::kNegative);
  }

  SynthDataset out;
  out.manifest = out_dir / "manifest.csv";
  write_manifest(out.manifest, images);
  if (options.write_audio) {
    out.audio_manifest = out_dir / "audio_manifest.csv";
    write_manifest(out.audio_manifest, audio);
  }
  out.records = load_manifest(out.manifest);
  return out;
}

}  // namespace birdxfer
