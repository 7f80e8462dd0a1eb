#ifndef SKILLPARSE_H
#define SKILLPARSE_H

/* Generated by cbindgen from the skillparse-ffi sources. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result codes.
 */
typedef enum SpStatus {
  SP_STATUS_OK = 0,
  SP_STATUS_NULL_ARGUMENT = 1,
  SP_STATUS_INVALID_ARGUMENT = 2,
  SP_STATUS_IO = 3,
  SP_STATUS_TRAINING = 4,
  SP_STATUS_EVALUATION = 5,
  SP_STATUS_BUFFER_TOO_SMALL = 6,
  SP_STATUS_PANIC = 99,
} SpStatus;

/**
 * A corpus of demonstrations.
 */
typedef struct SpDataset SpDataset;

/**
 * A trained policy.
 */
typedef struct SpModel SpModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *sp_last_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *sp_version(void);

/**
 * Generate `n` expert demonstrations with the default environment, seeds
 * `first_seed..first_seed + n`. `teleport` non-zero collapses navigation.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum SpStatus sp_dataset_generate(size_t n,
                                  uint64_t first_seed,
                                  int32_t teleport,
                                  struct SpDataset **out);

/**
 * Load a JSON Lines corpus.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` a valid handle slot.
 */
enum SpStatus sp_dataset_load(const char *path, struct SpDataset **out);

/**
 * # Safety
 * `ds` must come from this library; `path` must be a NUL-terminated string.
 */
enum SpStatus sp_dataset_save(const struct SpDataset *ds, const char *path);

/**
 * # Safety
 * `ds` must come from this library; `out_len` must be writable.
 */
enum SpStatus sp_dataset_len(const struct SpDataset *ds, size_t *out_len);

/**
 * Release a dataset; null is ignored.
 *
 * # Safety
 * `ds` must come from this library and not be used afterwards.
 */
void sp_dataset_free(struct SpDataset *ds);

/**
 * Train an arm (`"sl3"`, `"seq2seq"`, `"seq2seq2seq"` or `"no_latent"`)
 * keeping `fraction` of the annotations. `iterations` of 0 keeps the default.
 *
 * # Safety
 * `ds` must come from this library; `arm` must be a NUL-terminated string;
 * `out` a valid handle slot.
 */
enum SpStatus sp_train(const struct SpDataset *ds,
                       double fraction,
                       uint64_t seed,
                       const char *arm,
                       size_t iterations,
                       struct SpModel **out);

/**
 * Write a trained model's checkpoints into `dir`.
 *
 * # Safety
 * `model` must come from this library; `dir` must be a NUL-terminated string.
 */
enum SpStatus sp_model_save(const struct SpModel *model, const char *dir);

/**
 * # Safety
 * `dir` must be a NUL-terminated string; `out` a valid handle slot.
 */
enum SpStatus sp_model_load(const char *dir, struct SpModel **out);

/**
 * Release a model; null is ignored.
 *
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void sp_model_free(struct SpModel *model);

/**
 * Average offline subtask accuracy on a test corpus with ground truth.
 *
 * # Safety
 * Handles must come from this library; `out_accuracy` must be writable.
 */
enum SpStatus sp_eval_offline(const struct SpModel *model,
                              const struct SpDataset *test,
                              double *out_accuracy);

/**
 * Segment demo `index` of an annotated corpus against its annotation with
 * the model's executor. Writes 1-based segment ordinals, one per action,
 * into `out` (capacity `cap`) and the action count into `out_len`; returns
 * `BufferTooSmall` with `out_len` set when `cap` is short.
 *
 * # Safety
 * Handles must come from this library; `out` must hold `cap` elements and
 * `out_len` must be writable.
 */
enum SpStatus sp_segment(const struct SpModel *model,
                         const struct SpDataset *ds,
                         size_t index,
                         size_t *out,
                         size_t cap,
                         size_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SKILLPARSE_H */
