#ifndef AOSR_AOSR_H
#define AOSR_AOSR_H

#include <stddef.h>
#include <stdint.h>

#if defined(AOSR_BUILDING)
#define AOSR_API __attribute__((visibility("default")))
#else
#define AOSR_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Every call returns AOSR_OK or an error code; the message for the most
   recent failure on the calling thread is available from aosr_last_error. */
typedef enum aosr_status {
  AOSR_OK = 0,
  AOSR_ERR_IO = 1,
  AOSR_ERR_FORMAT = 2,
  AOSR_ERR_EMPTY_INPUT = 3,
  AOSR_ERR_DOMAIN = 4,
  AOSR_ERR_DEGENERATE_RANGE = 5,
  AOSR_ERR_BAD_WINDOW = 6,
  AOSR_ERR_SHAPE_MISMATCH = 7,
  AOSR_ERR_NEGATIVE_DEPTH = 8,
  AOSR_ERR_EMPTY_SET = 9,
  AOSR_ERR_MISSING_DEPTH = 10,
  AOSR_ERR_INDIVISIBLE_SPATIAL_DIMS = 11,
  AOSR_ERR_CONFIG_MISMATCH = 12,
  AOSR_ERR_ZERO_VECTOR = 13,
  AOSR_ERR_DEGENERATE_ANCHOR = 14,
  AOSR_ERR_MODEL_MISSING = 15,
  AOSR_ERR_TOO_SMALL = 16,
  AOSR_ERR_PAIR_MISMATCH = 17,
  AOSR_ERR_EMPTY_CORPUS = 18,
  AOSR_ERR_NON_FINITE_LOSS = 19,
  AOSR_ERR_INVALID_ARGUMENT = 20,
  AOSR_ERR_INTERNAL = 99
} aosr_status;

typedef struct aosr_image aosr_image;
typedef struct aosr_model aosr_model;
typedef struct aosr_niqe_model aosr_niqe_model;

/* Receives one human-readable progress line per event. */
typedef void (*aosr_progress_fn)(const char* line, void* user);

AOSR_API const char* aosr_version(void);
AOSR_API const char* aosr_last_error(void);
AOSR_API const char* aosr_status_name(aosr_status status);

/* Images: height x width x channels, interleaved, values nominally in [0,1]. */
AOSR_API aosr_status aosr_image_load(const char* path, aosr_image** out);
AOSR_API aosr_status aosr_image_create(int height, int width, int channels, const double* data,
                                       aosr_image** out);
AOSR_API aosr_status aosr_image_save(const aosr_image* img, const char* path);
AOSR_API aosr_status aosr_image_shape(const aosr_image* img, int* height, int* width, int* channels);
AOSR_API const double* aosr_image_data(const aosr_image* img);
AOSR_API void aosr_image_free(aosr_image* img);

/* Priors. */
AOSR_API aosr_status aosr_gamma_correct(const aosr_image* img, double gamma, double epsilon,
                                        aosr_image** out);
AOSR_API aosr_status aosr_optimized_linear_stretch(const aosr_image* img, double p_min, double p_max,
                                                   double p_a_min, double p_a_max, aosr_image** out);

/* Degradation of one image. depth may be NULL for "lowlight"; atmo_set_path
   may be NULL for the built-in set of the scene. */
AOSR_API aosr_status aosr_synthesize(const aosr_image* clean, const aosr_image* depth, const char* scene,
                                     const char* atmo_set_path, uint64_t seed, aosr_image** out);

/* Trained networks. */
AOSR_API aosr_status aosr_model_load(const char* checkpoint_path, aosr_model** out);
AOSR_API aosr_status aosr_model_restore(const aosr_model* model, const aosr_image* in, aosr_image** out);
AOSR_API void aosr_model_free(aosr_model* model);

/* Metrics. */
AOSR_API aosr_status aosr_psnr(const aosr_image* a, const aosr_image* b, double* out);
AOSR_API aosr_status aosr_ssim(const aosr_image* a, const aosr_image* b, double* out);
AOSR_API aosr_status aosr_niqe_model_load(const char* path, aosr_niqe_model** out);
AOSR_API aosr_status aosr_niqe(const aosr_image* img, const aosr_niqe_model* model, double* out);
AOSR_API void aosr_niqe_model_free(aosr_niqe_model* model);

/* Directory-level jobs. Outputs are overwritten deterministically. */

/* Writes out_dir/degraded/<name>.png, out_dir/clean/<name>.png and
   out_dir/manifest.json. depth_dir may be NULL for "lowlight". */
AOSR_API aosr_status aosr_synth_dir(const char* clean_dir, const char* depth_dir, const char* out_dir,
                                    const char* scene, const char* atmo_set_path, uint64_t seed,
                                    aosr_progress_fn progress, void* user);

/* scene_mix holds haze, sand and low-light fractions (NULL: uniform). */
AOSR_API aosr_status aosr_build_manifest(const char* clean_dir, const char* depth_dir,
                                         const double* scene_mix, double test_fraction, uint64_t seed,
                                         const char* out_path);

/* Writes out_dir/checkpoint.aosr and out_dir/train_log.csv after each epoch. */
AOSR_API aosr_status aosr_train(const char* config_path, const char* manifest_path, const char* out_dir,
                                aosr_progress_fn progress, void* user);

/* Restores every PNG of in_dir into out_dir under the same file name. */
AOSR_API aosr_status aosr_restore_dir(const char* checkpoint_path, const char* in_dir, const char* out_dir,
                                      aosr_progress_fn progress, void* user);

/* Writes the CSV report to report_path and a JSON copy next to it
   (extension replaced by .json). niqe_model_path may be NULL. */
AOSR_API aosr_status aosr_eval_dir(const char* restored_dir, const char* truth_dir, const char* dataset,
                                   const char* niqe_model_path, const char* report_path);

AOSR_API aosr_status aosr_ols_sweep(const char* grid_path, const char* eval_dir, const char* out_csv);

/* kind: "modules" or "losses". manifest_path may be NULL when the config
   names one under "manifest". */
AOSR_API aosr_status aosr_ablate(const char* kind, const char* config_path, const char* manifest_path,
                                 const char* out_csv, aosr_progress_fn progress, void* user);

#ifdef __cplusplus
}
#endif

#endif
