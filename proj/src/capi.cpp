#include "birdxfer/birdxfer.h"

#include <cstdlib>
#include <cstring>
#include <iostream>
#include <memory>
#include <new>
#include <optional>
#include <string>

#include "birdxfer/error.hpp"
#include "birdxfer/png_io.hpp"
#include "birdxfer/synth.hpp"
#include "birdxfer/workflow.hpp"

struct bx_config {
  birdxfer::RunConfig config;
};

struct bx_image {
  birdxfer::GraySpectrogram image;
};

struct bx_model {
  std::unique_ptr<birdxfer::Predictor> predictor;
};

namespace {

thread_local std::string g_last_error;

template <typename F>
bx_status guarded(F&& f) {
  try {
    f();
    g_last_error.clear();
    return BX_OK;
  } catch (const birdxfer::Error& e) {
    g_last_error = e.what();
    return static_cast<bx_status>(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return BX_ERR_INTERNAL;
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return BX_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return BX_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return BX_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (!p) throw birdxfer::InvalidArgument(std::string(what) + " is null");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

std::ostream* progress_stream(const birdxfer::RunConfig& c) { return c.verbose ? &std::cout : nullptr; }

}  // namespace

extern "C" {

const char* bx_version(void) { return "0.1.0"; }

const char* bx_last_error(void) { return g_last_error.c_str(); }

const char* bx_status_name(bx_status status) {
  switch (status) {
    case BX_OK: return "ok";
    case BX_ERR_INVALID_ARGUMENT: return "invalid argument";
    case BX_ERR_VALIDATION: return "validation error";
    case BX_ERR_IO: return "i/o error";
    case BX_ERR_FORMAT: return "format error";
    case BX_ERR_CONFIG: return "config error";
    case BX_ERR_NUMERIC: return "numeric error";
    case BX_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void bx_string_free(char* s) { std::free(s); }

void bx_set_quiet(int quiet) { birdxfer::set_warnings_muted(quiet != 0); }

bx_status bx_config_create(bx_config** out) {
  return guarded([&] {
    require(out, "out");
    *out = new bx_config{};
  });
}

void bx_config_destroy(bx_config* config) { delete config; }

bx_status bx_config_set(bx_config* config, const char* key, const char* value) {
  return guarded([&] {
    require(config, "config");
    require(key, "key");
    require(value, "value");
    config->config.set(key, value);
  });
}

bx_status bx_config_keys(char** out) {
  return guarded([&] {
    require(out, "out");
    std::string s;
    for (const auto& k : birdxfer::RunConfig::keys()) s += k + "\n";
    *out = dup_string(s);
  });
}

bx_status bx_config_to_json(const bx_config* config, char** out_json) {
  return guarded([&] {
    require(config, "config");
    require(out_json, "out_json");
    *out_json = dup_string(config->config.to_json().dump(2));
  });
}

bx_status bx_prepare(const bx_config* config, size_t* written, size_t* skipped) {
  return guarded([&] {
    require(config, "config");
    const auto r = birdxfer::cmd_prepare(config->config, progress_stream(config->config));
    if (written) *written = r.written;
    if (skipped) *skipped = r.skipped;
  });
}

bx_status bx_train_base(const bx_config* config, char** out_checkpoint) {
  return guarded([&] {
    require(config, "config");
    const auto r = birdxfer::cmd_train_base(config->config, progress_stream(config->config));
    if (out_checkpoint) *out_checkpoint = dup_string(r.checkpoint.string());
  });
}

bx_status bx_transfer(const bx_config* config, char** out_report) {
  return guarded([&] {
    require(config, "config");
    const auto r = birdxfer::cmd_transfer(config->config, progress_stream(config->config));
    if (out_report) *out_report = dup_string(r.report_path.string());
  });
}

bx_status bx_evaluate(const bx_config* config, const char* checkpoint, double* accuracy) {
  return guarded([&] {
    require(config, "config");
    require(checkpoint, "checkpoint");
    const auto r = birdxfer::cmd_evaluate(config->config, checkpoint, progress_stream(config->config));
    if (accuracy) *accuracy = r.accuracy;
  });
}

bx_status bx_image_from_audio(const char* audio_path, const bx_config* config, bx_image** out) {
  return guarded([&] {
    require(audio_path, "audio_path");
    require(out, "out");
    const birdxfer::SpectrogramConfig sc = config ? config->config.spectrogram : birdxfer::SpectrogramConfig{};
    auto img = std::make_unique<bx_image>();
    img->image = birdxfer::make_spectrogram(birdxfer::load_canonical(audio_path), sc);
    img->image.source_path = audio_path;
    *out = img.release();
  });
}

bx_status bx_image_load_png(const char* png_path, bx_image** out) {
  return guarded([&] {
    require(png_path, "png_path");
    require(out, "out");
    auto img = std::make_unique<bx_image>();
    img->image = birdxfer::load_spectrogram_png(png_path);
    *out = img.release();
  });
}

bx_status bx_image_save_png(const bx_image* image, const bx_config* config, const char* png_path) {
  return guarded([&] {
    require(image, "image");
    require(png_path, "png_path");
    const birdxfer::SpectrogramConfig sc = config ? config->config.spectrogram : birdxfer::SpectrogramConfig{};
    birdxfer::save_spectrogram_png(png_path, image->image, sc);
  });
}

bx_status bx_image_shape(const bx_image* image, int* rows, int* cols) {
  return guarded([&] {
    require(image, "image");
    if (rows) *rows = image->image.rows();
    if (cols) *cols = image->image.cols();
  });
}

bx_status bx_image_pixels(const bx_image* image, const uint8_t** pixels) {
  return guarded([&] {
    require(image, "image");
    require(pixels, "pixels");
    *pixels = image->image.pixels.data.data();
  });
}

void bx_image_destroy(bx_image* image) { delete image; }

bx_status bx_model_load(const char* checkpoint_path, const bx_config* config, bx_model** out) {
  return guarded([&] {
    require(checkpoint_path, "checkpoint_path");
    require(out, "out");
    const birdxfer::RunConfig rc = config ? config->config : birdxfer::RunConfig{};
    rc.validate();
    birdxfer::resolve_device(rc.strict);
    auto model = std::make_unique<bx_model>();
    model->predictor = std::make_unique<birdxfer::Predictor>(checkpoint_path, rc);
    *out = model.release();
  });
}

void bx_model_destroy(bx_model* model) { delete model; }

bx_status bx_model_num_classes(const bx_model* model, int* num_classes) {
  return guarded([&] {
    require(model, "model");
    require(num_classes, "num_classes");
    *num_classes = static_cast<int>(model->predictor->model().meta.class_names.size());
  });
}

bx_status bx_model_class_name(const bx_model* model, int index, const char** name) {
  return guarded([&] {
    require(model, "model");
    require(name, "name");
    const auto& names = model->predictor->model().meta.class_names;
    if (index < 0 || index >= static_cast<int>(names.size())) throw birdxfer::InvalidArgument("class index out of range");
    *name = names[index].c_str();
  });
}

bx_status bx_model_predict_image(bx_model* model, const bx_image* image, float* scores, size_t capacity,
                                 size_t* num_windows) {
  return guarded([&] {
    require(model, "model");
    require(image, "image");
    if (capacity > 0) require(scores, "scores");
    auto& lm = model->predictor->model();
    const int window = lm.meta.augment.crop_cols;
    const auto pred = birdxfer::predict_clip(lm.net, image->image, window, window / 2);
    for (size_t i = 0; i < capacity && i < pred.scores.size(); ++i) scores[i] = pred.scores[i];
    if (num_windows) *num_windows = pred.window_origins.size();
  });
}

bx_status bx_model_predict_file(bx_model* model, const char* path, char** out_json) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    require(out_json, "out_json");
    if (!std::filesystem::exists(path)) throw birdxfer::IoError(std::string("missing file: ") + path);
    *out_json = dup_string(model->predictor->predict(path).json_line);
  });
}

bx_status bx_synth_dataset(const char* out_dir, int num_classes, int per_class, uint64_t seed, double duration_s,
                           int write_audio, char** out_manifest) {
  return guarded([&] {
    require(out_dir, "out_dir");
    birdxfer::SynthOptions opts;
    opts.num_classes = num_classes;
    opts.per_class = per_class;
    opts.seed = seed;
    opts.duration_s = duration_s;
    opts.write_audio = write_audio != 0;
    const auto ds = birdxfer::synth_dataset(out_dir, opts);
    if (out_manifest) *out_manifest = dup_string(ds.manifest.string());
  });
}

}  // extern "C"
