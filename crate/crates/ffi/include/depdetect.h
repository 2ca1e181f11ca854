#ifndef DEPDETECT_H
#define DEPDETECT_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define DD_LABEL_NON_DEPRESSIVE 0

#define DD_LABEL_DEPRESSIVE 1

typedef enum DdStatus {
  DD_STATUS_OK = 0,
  DD_STATUS_NULL_POINTER = 1,
  DD_STATUS_INVALID_UTF8 = 2,
  DD_STATUS_IO = 3,
  /**
   * Not an artifact, or a malformed one.
   */
  DD_STATUS_FORMAT = 4,
  /**
   * Truncated or corrupted artifact.
   */
  DD_STATUS_INTEGRITY = 5,
  DD_STATUS_UNSUPPORTED_VERSION = 6,
  DD_STATUS_INVALID_ARGUMENT = 7,
  DD_STATUS_PANIC = 8,
} DdStatus;

/**
 * Loaded model; only ever handled through a pointer.
 */
typedef struct DdModel DdModel;

typedef struct DdProfile {
  size_t n_tweets;
  size_t n_depressive;
  double fraction;
  double threshold;
  bool flagged;
} DdProfile;

typedef struct DdMetrics {
  double precision;
  double recall;
  double f1;
  double accuracy;
} DdMetrics;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Loads a `.ddm` file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum DdStatus dd_model_load(const char *path, struct DdModel **out);

/**
 * Loads an artifact from memory.
 *
 * # Safety
 * `data` must point to `len` readable bytes and `out` must be valid.
 */
enum DdStatus dd_model_load_bytes(const uint8_t *data, size_t len, struct DdModel **out);

/**
 * Releases a model. Null is ignored.
 *
 * # Safety
 * `model` must come from a load call and not have been freed.
 */
void dd_model_free(struct DdModel *model);

/**
 * Classifier name (`mnb`, `svm`, `rf`, `lstm`) as a static string.
 *
 * # Safety
 * `model` and `out` must be valid pointers.
 */
enum DdStatus dd_model_kind(const struct DdModel *model, const char **out);

/**
 * Classifies one text with the model's stored preprocessing. `out_label`
 * receives `DD_LABEL_DEPRESSIVE` or `DD_LABEL_NON_DEPRESSIVE`; `out_score`
 * may be null.
 *
 * # Safety
 * `model`, `text` and `out_label` must be valid; `text` NUL-terminated.
 */
enum DdStatus dd_predict(const struct DdModel *model,
                         const char *text,
                         int32_t *out_label,
                         double *out_score);

/**
 * Classifies `n` tweets of one user and applies the flag rule
 * `fraction > threshold`.
 *
 * # Safety
 * `texts` must point to `n` NUL-terminated strings; `model` and `out` valid.
 */
enum DdStatus dd_profile(const struct DdModel *model,
                         const char *const *texts,
                         size_t n,
                         double threshold,
                         struct DdProfile *out);

/**
 * Precision, recall, F1 and accuracy from confusion counts; undefined
 * ratios are 0.
 *
 * # Safety
 * `out` must be a valid pointer.
 */
enum DdStatus dd_metrics(uint64_t tp,
                         uint64_t fp,
                         uint64_t fn_,
                         uint64_t tn,
                         struct DdMetrics *out);

/**
 * Message of the last failed call on this thread, empty after a success.
 * Valid until the next call from the same thread.
 */
const char *dd_last_error(void);

const char *dd_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* DEPDETECT_H */
