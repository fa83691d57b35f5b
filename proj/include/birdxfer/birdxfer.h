/* C interface to the birdxfer library. All functions return a bx_status;
 * on failure bx_last_error() describes the most recent error on the calling
 * thread. Strings returned through char** are owned by the caller and must be
 * released with bx_string_free. */
#ifndef BIRDXFER_BIRDXFER_H
#define BIRDXFER_BIRDXFER_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(BIRDXFER_BUILDING_LIBRARY)
#    define BX_API __declspec(dllexport)
#  else
#    define BX_API __declspec(dllimport)
#  endif
#else
#  define BX_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum bx_status {
  BX_OK = 0,
  BX_ERR_INVALID_ARGUMENT = 1,
  BX_ERR_VALIDATION = 2,
  BX_ERR_IO = 3,
  BX_ERR_FORMAT = 4,
  BX_ERR_CONFIG = 5,
  BX_ERR_NUMERIC = 6,
  BX_ERR_INTERNAL = 7
} bx_status;

typedef struct bx_config bx_config;
typedef struct bx_model bx_model;
typedef struct bx_image bx_image;

BX_API const char* bx_version(void);
BX_API const char* bx_last_error(void);
BX_API const char* bx_status_name(bx_status status);
BX_API void bx_string_free(char* s);
/* Suppresses "warning: ..." lines on stderr. */
BX_API void bx_set_quiet(int quiet);

/* Run configuration: defaults, then bx_config_set for each dotted key
 * ("schedule.initial_lr", "data.manifest", ...). */
BX_API bx_status bx_config_create(bx_config** out);
BX_API void bx_config_destroy(bx_config* config);
BX_API bx_status bx_config_set(bx_config* config, const char* key, const char* value);
/* Newline-separated list of accepted keys. */
BX_API bx_status bx_config_keys(char** out);
BX_API bx_status bx_config_to_json(const bx_config* config, char** out_json);

/* Pipeline commands. Progress lines go to stdout when verbose is set. */
BX_API bx_status bx_prepare(const bx_config* config, size_t* written, size_t* skipped);
BX_API bx_status bx_train_base(const bx_config* config, char** out_checkpoint);
BX_API bx_status bx_transfer(const bx_config* config, char** out_report);
BX_API bx_status bx_evaluate(const bx_config* config, const char* checkpoint, double* accuracy);

/* Spectrogram images. */
BX_API bx_status bx_image_from_audio(const char* audio_path, const bx_config* config, bx_image** out);
BX_API bx_status bx_image_load_png(const char* png_path, bx_image** out);
BX_API bx_status bx_image_save_png(const bx_image* image, const bx_config* config, const char* png_path);
BX_API bx_status bx_image_shape(const bx_image* image, int* rows, int* cols);
/* Row-major, row 0 = highest frequency. Valid until the image is destroyed. */
BX_API bx_status bx_image_pixels(const bx_image* image, const uint8_t** pixels);
BX_API void bx_image_destroy(bx_image* image);

/* Trained models. config supplies strictness and the multi-label threshold. */
BX_API bx_status bx_model_load(const char* checkpoint_path, const bx_config* config, bx_model** out);
BX_API void bx_model_destroy(bx_model* model);
BX_API bx_status bx_model_num_classes(const bx_model* model, int* num_classes);
/* Pointer valid while the model lives. */
BX_API bx_status bx_model_class_name(const bx_model* model, int index, const char** name);
/* Writes min(capacity, num_classes) clip scores. */
BX_API bx_status bx_model_predict_image(bx_model* model, const bx_image* image, float* scores, size_t capacity,
                                        size_t* num_windows);
/* One JSON line {path, label|labels, scores, windows} for a PNG or WAV file. */
BX_API bx_status bx_model_predict_file(bx_model* model, const char* path, char** out_json);

/* Synthetic tone dataset: PNGs (and WAVs when write_audio) plus manifests
 * under out_dir. Returns the spectrogram manifest path. */
BX_API bx_status bx_synth_dataset(const char* out_dir, int num_classes, int per_class, uint64_t seed,
                                  double duration_s, int write_audio, char** out_manifest);

#ifdef __cplusplus
}
#endif

#endif
