#ifndef SPARSE_DENOISE_H
#define SPARSE_DENOISE_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#define SD_DICT_LOG_GABOR 0

#define SD_DICT_DCT 1

#define SD_CODER_OMP 0

#define SD_CODER_AMP 1

#define SD_UPDATER_NNMF 0

#define SD_UPDATER_KSVD 1

#define SD_UPDATER_NONE 2

// Result of every fallible call.
typedef enum SdStatus {
  SD_STATUS_OK = 0,
  SD_STATUS_NULL_POINTER = 1,
  SD_STATUS_INVALID_ARGUMENT = 2,
  SD_STATUS_IO = 3,
  SD_STATUS_FORMAT = 4,
  SD_STATUS_DIMENSION_MISMATCH = 5,
  SD_STATUS_NUMERICAL = 6,
  SD_STATUS_PANIC = 7,
} SdStatus;

// Opaque dictionary (atoms stored column by column).
typedef struct SdDictionary SdDictionary;

// Opaque grayscale image.
typedef struct SdImage SdImage;

// Denoising settings. Fill with [`sd_config_default`] and adjust.
typedef struct SdDenoiseConfig {
  size_t patch_side;
  size_t stride;
  // `SD_DICT_*`.
  uint32_t dict_kind;
  size_t dict_k;
  // `SD_CODER_*`.
  uint32_t coder;
  // `SD_UPDATER_*`.
  uint32_t updater;
  size_t outer_iters;
  double sigma;
  double epsilon_factor;
  // Explicit residual energy goal; zero or negative derives it from sigma.
  double epsilon;
  double nn_threshold;
  size_t max_atoms;
  size_t nmf_inner_iters;
  size_t usage_min;
  double coherence_max;
  bool signed_dictionary;
  bool dc_atom;
  size_t lg_scales;
  size_t lg_orientations;
  // Zero picks the default for the bank's sign mode.
  size_t lg_phases;
  double lg_min_wavelength;
  double lg_scale_factor;
  double lg_sigma_on_f;
} SdDenoiseConfig;

// Summary of one denoising run. PSNR fields are NaN without a reference.
typedef struct SdDenoiseReport {
  double psnr_in;
  double psnr_out;
  size_t atoms_replaced;
  double wall_time;
  uint64_t inner_product_count;
  size_t outer_iterations_run;
  bool early_exit;
  double epsilon;
  double final_mean_residual;
  size_t columns_converged;
  size_t columns_max_atoms;
  size_t columns_stalled;
} SdDenoiseReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *sd_version(void);

// Message for the last failed call on this thread, or NULL if the last call
// succeeded. Valid until the next library call on the same thread.
const char *sd_last_error_message(void);

// Create an image from `width * height` row-major intensities, or a black
// image when `pixels` is NULL.
//
// # Safety
// `pixels` must be NULL or point to `width * height` readable doubles;
// `out` must be a valid pointer.
enum SdStatus sd_image_new(size_t width, size_t height, const double *pixels, struct SdImage **out);

// Read a binary PGM or 8-bit grayscale PNG.
//
// # Safety
// `path` must be a NUL-terminated string; `out` must be a valid pointer.
enum SdStatus sd_image_load(const char *path, struct SdImage **out);

// Write an image as binary PGM (clamped and rounded to 8 bits).
//
// # Safety
// `image` must be a live handle; `path` a NUL-terminated string.
enum SdStatus sd_image_save(const struct SdImage *image, const char *path);

// # Safety
// `image` must be NULL or a handle not yet freed.
void sd_image_free(struct SdImage *image);

// # Safety
// `image` must be NULL or a live handle.
size_t sd_image_width(const struct SdImage *image);

// # Safety
// `image` must be NULL or a live handle.
size_t sd_image_height(const struct SdImage *image);

// Row-major pixel buffer of `width * height` doubles, owned by the handle.
//
// # Safety
// `image` must be NULL or a live handle.
const double *sd_image_pixels(const struct SdImage *image);

// Add clamped Gaussian noise with the given seed.
//
// # Safety
// `image` must be a live handle; `out` a valid pointer.
enum SdStatus sd_add_noise(const struct SdImage *image,
                           double sigma,
                           uint64_t seed,
                           struct SdImage **out);

// # Safety
// `a` and `b` must be live handles; `out` a valid pointer.
enum SdStatus sd_mse(const struct SdImage *a, const struct SdImage *b, double *out);

// PSNR in dB; identical images give positive infinity.
//
// # Safety
// `a` and `b` must be live handles; `out` a valid pointer.
enum SdStatus sd_psnr(const struct SdImage *a, const struct SdImage *b, double *out);

// Fill `out` with the library defaults.
//
// # Safety
// `out` must be a valid pointer.
enum SdStatus sd_config_default(struct SdDenoiseConfig *out);

// Denoise `noisy`. `report` may be NULL.
//
// # Safety
// `noisy` must be a live handle, `config` and `out` valid pointers, and
// `report` NULL or valid.
enum SdStatus sd_denoise(const struct SdImage *noisy,
                         const struct SdDenoiseConfig *config,
                         struct SdImage **out,
                         struct SdDenoiseReport *report);

// Add noise of `config->sigma` with `seed` to `clean`, denoise, and score
// both images against `clean`. `out` and `report` may be NULL.
//
// # Safety
// `clean` must be a live handle, `config` valid, `out` and `report` NULL or
// valid.
enum SdStatus sd_denoise_with_reference(const struct SdImage *clean,
                                        const struct SdDenoiseConfig *config,
                                        uint64_t seed,
                                        struct SdImage **out,
                                        struct SdDenoiseReport *report);

// The initial dictionary `config` would start from.
//
// # Safety
// `config` and `out` must be valid pointers.
enum SdStatus sd_dictionary_initial(const struct SdDenoiseConfig *config,
                                    struct SdDictionary **out);

// # Safety
// `path` must be a NUL-terminated string; `out` a valid pointer.
enum SdStatus sd_dictionary_load(const char *path, struct SdDictionary **out);

// # Safety
// `dict` must be a live handle; `path` a NUL-terminated string.
enum SdStatus sd_dictionary_save(const struct SdDictionary *dict, const char *path);

// Atom length.
//
// # Safety
// `dict` must be NULL or a live handle.
size_t sd_dictionary_rows(const struct SdDictionary *dict);

// Atom count.
//
// # Safety
// `dict` must be NULL or a live handle.
size_t sd_dictionary_atoms(const struct SdDictionary *dict);

// Column-major atom data (`rows * atoms` doubles), owned by the handle.
//
// # Safety
// `dict` must be NULL or a live handle.
const double *sd_dictionary_data(const struct SdDictionary *dict);

// # Safety
// `dict` must be NULL or a handle not yet freed.
void sd_dictionary_free(struct SdDictionary *dict);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPARSE_DENOISE_H */
