#ifndef ICCN_H
#define ICCN_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IccnStatus {
  ICCN_STATUS_OK = 0,
  ICCN_STATUS_NULL_POINTER = 1,
  ICCN_STATUS_INVALID_ARGUMENT = 2,
  ICCN_STATUS_IO = 3,
  ICCN_STATUS_PARSE = 4,
  ICCN_STATUS_CONFIG = 5,
  ICCN_STATUS_DATA = 6,
  ICCN_STATUS_NUMERICAL = 7,
  ICCN_STATUS_EVALUATION = 8,
  ICCN_STATUS_PANIC = 9,
} IccnStatus;

/**
 * Fitted linear CCA.
 */
typedef struct IccnCca IccnCca;

/**
 * Trained ICCN model.
 */
typedef struct IccnModel IccnModel;

typedef struct IccnRegressionMetrics {
  double acc2;
  double f_score;
  double mae;
  double acc7;
  double corr;
  size_t n_excluded;
  /**
   * Non-zero when `corr` was forced to 0 by a zero-variance side.
   */
  bool corr_degenerate;
} IccnRegressionMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. Owned by the library.
 */
const char *iccn_last_error_message(void);

/**
 * Loads a checkpoint written by `iccn train`. `config` is the run's
 * config.json; null means config.json beside the checkpoint.
 *
 * # Safety
 * `checkpoint` and `config` (if non-null) must be NUL-terminated strings;
 * `out` must be a valid pointer.
 */
enum IccnStatus iccn_model_load(const char *checkpoint, const char *config, struct IccnModel **out);

/**
 * Width of one embedding row, [K_ta; H_t; K_tv]. 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle from [`iccn_model_load`].
 */
size_t iccn_model_embedding_width(const struct IccnModel *model);

/**
 * Input widths expected by the model.
 *
 * # Safety
 * `model` must be a live handle; the out pointers must be valid.
 */
enum IccnStatus iccn_model_dims(const struct IccnModel *model,
                                size_t *d_t,
                                size_t *d_a,
                                size_t *d_v);

/**
 * Embeds one utterance. `audio` is d_a x audio_frames and `video` is
 * d_v x video_frames, both row-major (one row per feature).
 *
 * # Safety
 * Every pointer must address at least the stated number of doubles.
 */
enum IccnStatus iccn_model_embed(const struct IccnModel *model,
                                 const double *text,
                                 size_t text_len,
                                 const double *audio,
                                 size_t audio_frames,
                                 const double *video,
                                 size_t video_frames,
                                 double *out,
                                 size_t out_len);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void iccn_model_free(struct IccnModel *model);

/**
 * Linear CCA of `x` (n1 x m) and `y` (n2 x m), row-major, one column per
 * sample, keeping `r` components with ridge `eps`.
 *
 * # Safety
 * `x` and `y` must address n1*m and n2*m doubles; `out` must be valid.
 */
enum IccnStatus iccn_cca_fit(const double *x,
                             size_t n1,
                             const double *y,
                             size_t n2,
                             size_t m,
                             size_t r,
                             double eps,
                             struct IccnCca **out);

/**
 * Number of retained components; 0 for a null handle.
 *
 * # Safety
 * `cca` must be null or a live handle.
 */
size_t iccn_cca_components(const struct IccnCca *cca);

/**
 * Copies the canonical correlations (descending) into `out`.
 *
 * # Safety
 * `out` must address `len` doubles.
 */
enum IccnStatus iccn_cca_correlations(const struct IccnCca *cca, double *out, size_t len);

/**
 * # Safety
 * `cca` must be null or a handle not yet freed.
 */
void iccn_cca_free(struct IccnCca *cca);

/**
 * Sentiment metrics for `n` predictions against labels in [-3, 3], with
 * support-weighted F1.
 *
 * # Safety
 * `predictions` and `labels` must address `n` doubles; `out` must be valid.
 */
enum IccnStatus iccn_evaluate(const double *predictions,
                              const double *labels,
                              size_t n,
                              struct IccnRegressionMetrics *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* ICCN_H */
