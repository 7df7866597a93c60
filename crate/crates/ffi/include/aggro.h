#ifndef AGGRO_H
#define AGGRO_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of classes; probability buffers must hold this many doubles.
 */
#define AGGRO_NUM_CLASSES 3

/**
 * Result codes shared by every fallible function.
 */
typedef enum AggroStatus {
  AGGRO_STATUS_OK = 0,
  AGGRO_STATUS_NULL_ARGUMENT = 1,
  AGGRO_STATUS_INVALID_UTF8 = 2,
  AGGRO_STATUS_IO = 3,
  AGGRO_STATUS_CORRUPT_MODEL = 4,
  AGGRO_STATUS_UNSUPPORTED_VERSION = 5,
  AGGRO_STATUS_INVALID_ARGUMENT = 6,
  AGGRO_STATUS_PANIC = 7,
} AggroStatus;

/**
 * Class codes used for labels and probability slots.
 */
typedef enum AggroLabel {
  AGGRO_LABEL_NAG = 0,
  AGGRO_LABEL_CAG = 1,
  AGGRO_LABEL_OAG = 2,
} AggroLabel;

/**
 * A loaded model. Opaque to C.
 */
typedef struct AggroModel AggroModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Load a model file. On success `*out` receives a handle to release with
 * `aggro_model_free`; on failure `*out` is set to null.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum AggroStatus aggro_model_load(const char *path, struct AggroModel **out);

/**
 * Release a model. Null is ignored.
 *
 * # Safety
 * `model` must be null or a handle from `aggro_model_load` not yet freed.
 */
void aggro_model_free(struct AggroModel *model);

/**
 * Classify one post. `out_label` receives an `AggroLabel` code and
 * `out_probs`, if not null, the three class probabilities in code order.
 *
 * # Safety
 * `model` must be a live handle, `text` a NUL-terminated string,
 * `out_label` a valid pointer and `out_probs` null or room for three doubles.
 */
enum AggroStatus aggro_model_predict(const struct AggroModel *model,
                                     const char *text,
                                     int32_t *out_label,
                                     double *out_probs);

/**
 * Vocabulary size of a loaded model, or 0 for a null handle.
 *
 * # Safety
 * `model` must be null or a live handle.
 */
size_t aggro_model_vocab_size(const struct AggroModel *model);

/**
 * Preprocessed tokens of `text` as the model sees them, joined by single
 * spaces. With a null `model` the default pipeline is used (no spelling
 * correction, built-in lemmatizer). Release `*out` with `aggro_string_free`.
 *
 * # Safety
 * `model` must be null or a live handle, `text` a NUL-terminated string and
 * `out` a valid pointer.
 */
enum AggroStatus aggro_preprocess(const struct AggroModel *model, const char *text, char **out);

/**
 * Support-weighted F1 of `pred` against `gold`, both arrays of `n` label
 * codes.
 *
 * # Safety
 * `gold` and `pred` must point to `n` readable values and `out` be valid.
 */
enum AggroStatus aggro_weighted_f1(const int32_t *gold, const int32_t *pred, size_t n, double *out);

/**
 * Name ("NAG", "CAG", "OAG") of a label code, or null if out of range.
 * The string is static.
 */
const char *aggro_label_name(int32_t label);

/**
 * Message for the last failed call on this thread, or null. Valid until
 * the next call into this library on the same thread.
 */
const char *aggro_last_error_message(void);

/**
 * Release a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must be null or a string from this library not yet freed.
 */
void aggro_string_free(char *s);

/**
 * Library version as a static string.
 */
const char *aggro_version(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AGGRO_H */
