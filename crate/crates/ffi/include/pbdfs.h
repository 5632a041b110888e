#ifndef PBDFS_H
#define PBDFS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PbdfsStatus {
  PBDFS_STATUS_OK = 0,
  PBDFS_STATUS_NULL_POINTER = 1,
  PBDFS_STATUS_INVALID_ARGUMENT = 2,
  PBDFS_STATUS_IO = 3,
  PBDFS_STATUS_PARSE = 4,
  PBDFS_STATUS_NOT_FOUND = 5,
  PBDFS_STATUS_INVALID_INSTANCE = 6,
  PBDFS_STATUS_DIMENSION = 7,
  PBDFS_STATUS_NO_SOLUTION = 8,
  PBDFS_STATUS_INTERNAL = 99,
} PbdfsStatus;

typedef enum PbdfsScoreVariant {
  // `max(p, 1 - p)`, rounding `p` for the first child.
  PBDFS_SCORE_VARIANT_MAX_P1MP = 0,
  // `p`, fixing to 1 first.
  PBDFS_SCORE_VARIANT_P = 1,
  // `1 - p`, fixing to 0 first.
  PBDFS_SCORE_VARIANT_ONE_MINUS_P = 2,
} PbdfsScoreVariant;

typedef enum PbdfsTerminationKind {
  PBDFS_TERMINATION_KIND_FIRST_FEASIBLE = 0,
  // `limit` is seconds.
  PBDFS_TERMINATION_KIND_TIME_LIMIT = 1,
  // `limit` is a node count.
  PBDFS_TERMINATION_KIND_NODE_LIMIT = 2,
  // Search the whole tree.
  PBDFS_TERMINATION_KIND_EXHAUSTIVE = 3,
} PbdfsTerminationKind;

// Opaque binary MIP instance.
typedef struct PbdfsInstance PbdfsInstance;

// Opaque trained predictor.
typedef struct PbdfsModel PbdfsModel;

// Opaque outcome of a search or an exact solve.
typedef struct PbdfsResult PbdfsResult;

// Stopping rule for guided search.
typedef struct PbdfsTermination {
  enum PbdfsTerminationKind kind;
  double limit;
} PbdfsTermination;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread; empty after a
// success. Valid until the next call into this library on the same thread.
const char *pbdfs_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *pbdfs_version(void);

// Reads an instance file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum PbdfsStatus pbdfs_instance_read(const char *path, struct PbdfsInstance **out);

// Parses an instance from JSON text in the instance file format.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a writable pointer.
enum PbdfsStatus pbdfs_instance_from_json(const char *json, struct PbdfsInstance **out);

// Number of variables; 0 for a null handle.
//
// # Safety
// `inst` must be null or a live instance handle.
size_t pbdfs_instance_nvars(const struct PbdfsInstance *inst);

// # Safety
// `inst` must be null or a handle not yet freed.
void pbdfs_instance_free(struct PbdfsInstance *inst);

// Loads a GCN or logistic-regression model file.
//
// # Safety
// `path` must be a NUL-terminated string and `out` a writable pointer.
enum PbdfsStatus pbdfs_model_load(const char *path, struct PbdfsModel **out);

// # Safety
// `model` must be null or a handle not yet freed.
void pbdfs_model_free(struct PbdfsModel *model);

// Writes `P(x_i = 1)` for every variable into `probs`, which must hold
// exactly `len == nvars` values.
//
// # Safety
// Handles must be live; `probs` must be writable for `len` doubles.
enum PbdfsStatus pbdfs_model_predict(const struct PbdfsModel *model,
                                     const struct PbdfsInstance *inst,
                                     double *probs,
                                     size_t len);

// Guided depth-first search driven by `probs` (length `len == nvars`).
//
// # Safety
// `inst` must be live; `probs` readable for `len` doubles; `out` writable.
enum PbdfsStatus pbdfs_run_pbdfs(const struct PbdfsInstance *inst,
                                 const double *probs,
                                 size_t len,
                                 enum PbdfsScoreVariant variant,
                                 struct PbdfsTermination term,
                                 struct PbdfsResult **out);

// Exact best-bound branch and bound. `node_limit == 0` and
// `time_limit <= 0` mean unlimited.
//
// # Safety
// `inst` must be live and `out` writable.
enum PbdfsStatus pbdfs_solve_exact(const struct PbdfsInstance *inst,
                                   uint64_t node_limit,
                                   double time_limit,
                                   struct PbdfsResult **out);

// Whether a feasible solution was found.
//
// # Safety
// `res` must be null or a live result handle.
bool pbdfs_result_has_solution(const struct PbdfsResult *res);

// Objective of the best solution; `NoSolution` when none was found.
//
// # Safety
// `res` must be a live result handle and `out` writable.
enum PbdfsStatus pbdfs_result_objective(const struct PbdfsResult *res, double *out);

// Copies the 0/1 solution into `values`, which must hold `len == nvars`
// bytes.
//
// # Safety
// `res` must be live and `values` writable for `len` bytes.
enum PbdfsStatus pbdfs_result_solution(const struct PbdfsResult *res, uint8_t *values, size_t len);

// Whether the search tree was exhausted.
//
// # Safety
// `res` must be null or a live result handle.
bool pbdfs_result_proved_optimal(const struct PbdfsResult *res);

// Nodes whose LP was solved.
//
// # Safety
// `res` must be null or a live result handle.
size_t pbdfs_result_nodes(const struct PbdfsResult *res);

// # Safety
// `res` must be null or a live result handle.
size_t pbdfs_result_backtracks(const struct PbdfsResult *res);

// # Safety
// `res` must be null or a live result handle.
double pbdfs_result_wall_time(const struct PbdfsResult *res);

// # Safety
// `res` must be null or a handle not yet freed.
void pbdfs_result_free(struct PbdfsResult *res);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PBDFS_H */
