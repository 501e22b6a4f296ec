#ifndef TPICTM_H
#define TPICTM_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum TpModel {
  TP_MODEL_CHAN_VESE = 0,
  TP_MODEL_LIF = 1,
} TpModel;

typedef enum TpStatus {
  TP_STATUS_OK = 0,
  TP_STATUS_NULL_POINTER = 1,
  TP_STATUS_INVALID_ARGUMENT = 2,
  TP_STATUS_SHAPE_MISMATCH = 3,
  TP_STATUS_DEGENERATE = 4,
  TP_STATUS_IO = 5,
  TP_STATUS_DECODE = 6,
  TP_STATUS_TOPOLOGY_VIOLATION = 7,
  TP_STATUS_ENERGY_INCREASE = 8,
  TP_STATUS_PANIC = 9,
} TpStatus;

typedef enum TpTermination {
  TP_TERMINATION_CONVERGED = 0,
  TP_TERMINATION_MAX_ITERATIONS = 1,
  TP_TERMINATION_COLLAPSED = 2,
} TpTermination;

typedef struct TpImage TpImage;

typedef struct TpMask TpMask;

typedef struct TpResult TpResult;

/**
 * Solver and model settings. Fill with [`tp_solver_params_default`] first.
 */
typedef struct TpSolverParams {
  double tau1;
  double tau2;
  double lambda;
  size_t tol;
  size_t max_iter;
  /**
   * Foreground connectivity, 4 or 8; the background uses the other one.
   */
  uint32_t fg_connectivity;
  bool topology;
  enum TpModel model;
  /**
   * LIF settings, ignored for Chan-Vese.
   */
  double delta;
  double lambda1;
  double lambda2;
  double eps;
} TpSolverParams;

typedef struct TpTraceRecord {
  size_t iter;
  double total;
  double fidelity;
  double perimeter;
  size_t predicted_flips;
  size_t accepted_flips;
  size_t rejected_flips;
  size_t fg_components;
  size_t bg_components;
} TpTraceRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null after a success.
 * The pointer stays valid until the next call on the same thread.
 */
const char *tp_last_error_message(void);

/**
 * Static name of a status code.
 */
const char *tp_status_string(enum TpStatus status);

enum TpStatus tp_solver_params_default(struct TpSolverParams *params);

/**
 * Builds an image from `rows * cols * channels` interleaved values in [0, 1].
 */
enum TpStatus tp_image_new(size_t rows,
                           size_t cols,
                           size_t channels,
                           const double *values,
                           struct TpImage **image);

/**
 * Loads a PNG or PNM image, rescaled to [0, 1].
 */
enum TpStatus tp_image_load(const char *file, struct TpImage **image);

enum TpStatus tp_image_shape(const struct TpImage *image,
                             size_t *rows,
                             size_t *cols,
                             size_t *channels);

void tp_image_free(struct TpImage *image);

/**
 * Builds a mask from `rows * cols` bytes, each 0 or 1.
 */
enum TpStatus tp_mask_new(size_t rows, size_t cols, const uint8_t *bits, struct TpMask **mask);

/**
 * Loads a mask image; pixels at or above half intensity are foreground.
 */
enum TpStatus tp_mask_load(const char *file, struct TpMask **mask);

enum TpStatus tp_mask_save(const struct TpMask *mask, const char *file);

enum TpStatus tp_mask_shape(const struct TpMask *mask, size_t *rows, size_t *cols);

/**
 * Copies the mask into `bits` as 0/1 bytes; `len` must equal `rows * cols`.
 */
enum TpStatus tp_mask_copy(const struct TpMask *mask, uint8_t *bits, size_t len);

/**
 * Periodic component counts of both phases.
 */
enum TpStatus tp_mask_component_counts(const struct TpMask *mask,
                                       uint32_t fg_connectivity,
                                       size_t *fg,
                                       size_t *bg);

enum TpStatus tp_mask_is_simple(const struct TpMask *mask,
                                size_t row,
                                size_t col,
                                uint32_t fg_connectivity,
                                bool *simple);

void tp_mask_free(struct TpMask *mask);

/**
 * Segments `image` starting from `init`. Reaching `max_iter` is not an
 * error; check [`tp_result_termination`].
 */
enum TpStatus tp_segment(const struct TpImage *image,
                         const struct TpMask *init,
                         const struct TpSolverParams *params,
                         struct TpResult **result);

/**
 * Copies the final mask into a new handle.
 */
enum TpStatus tp_result_mask(const struct TpResult *result, struct TpMask **mask);

enum TpStatus tp_result_termination(const struct TpResult *result, enum TpTermination *termination);

/**
 * Number of trace records, one per iteration.
 */
enum TpStatus tp_result_iterations(const struct TpResult *result, size_t *count);

enum TpStatus tp_result_record(const struct TpResult *result,
                               size_t index,
                               struct TpTraceRecord *record);

void tp_result_free(struct TpResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TPICTM_H */
