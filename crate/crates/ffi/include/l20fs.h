#ifndef L20FS_H
#define L20FS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum L20fsAlgorithm {
  L20FS_ALGORITHM_HIHT = 0,
  L20FS_ALGORITHM_AHIHT = 1,
} L20fsAlgorithm;

typedef enum L20fsStatus {
  L20FS_STATUS_OK = 0,
  L20FS_STATUS_NULL_POINTER = 1,
  L20FS_STATUS_INVALID_ARGUMENT = 2,
  L20FS_STATUS_SHAPE_MISMATCH = 3,
  L20FS_STATUS_NON_FINITE = 4,
  L20FS_STATUS_DIVERGENCE = 5,
  L20FS_STATUS_DEGENERATE_DATA = 6,
  L20FS_STATUS_OUT_OF_RANGE = 7,
  L20FS_STATUS_BUFFER_TOO_SMALL = 8,
  L20FS_STATUS_PANIC = 99,
} L20fsStatus;

/*
 Opaque labelled dataset.
 */
typedef struct L20fsDataset L20fsDataset;

/*
 Opaque regularization path.
 */
typedef struct L20fsPath L20fsPath;

/*
 Solver settings. `lambda0`, `l0` and `max_l` are chosen automatically
 when set to a value `<= 0`.
 */
typedef struct L20fsSolverConfig {
  double lambda0;
  double l0;
  double rho;
  double gamma;
  double eta;
  double epsilon;
  size_t path_steps;
  size_t max_inner_iterations;
  double max_l;
  uint64_t seed;
} L20fsSolverConfig;

/*
 Scalar summary of one path point.
 */
typedef struct L20fsPointInfo {
  double lambda;
  double objective;
  size_t support_size;
  size_t inner_iterations;
  size_t iht_updates;
  double final_l;
  bool truncated;
} L20fsPointInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/*
 Message for the last failed call on this thread, or null. The pointer
 stays valid until the next failing call on the same thread.
 */
const char *l20fs_last_error(void);

struct L20fsSolverConfig l20fs_solver_config_default(void);

/*
 Copies the inputs into a new dataset handle written to `*out`.
 */
enum L20fsStatus l20fs_dataset_new(const double *features,
                                   size_t feature_count,
                                   size_t sample_count,
                                   const size_t *labels,
                                   size_t class_count,
                                   struct L20fsDataset **out);

void l20fs_dataset_free(struct L20fsDataset *dataset);

/*
 Centers the dataset and runs the homotopy solver, writing a path handle to `*out`.
 */
enum L20fsStatus l20fs_solve(const struct L20fsDataset *dataset,
                             enum L20fsAlgorithm algorithm,
                             const struct L20fsSolverConfig *config,
                             struct L20fsPath **out);

void l20fs_path_free(struct L20fsPath *path);

/*
 Number of points, or 0 for a null handle.
 */
size_t l20fs_path_len(const struct L20fsPath *path);

/*
 Feature and class counts of the weight matrices.
 */
enum L20fsStatus l20fs_path_dims(const struct L20fsPath *path,
                                 size_t *feature_count,
                                 size_t *class_count);

enum L20fsStatus l20fs_path_point(const struct L20fsPath *path,
                                  size_t index,
                                  struct L20fsPointInfo *out);

/*
 Writes the ascending selected-feature indices of point `index`; their
 number goes to `*written`.
 */
enum L20fsStatus l20fs_path_support(const struct L20fsPath *path,
                                    size_t index,
                                    size_t *buffer,
                                    size_t capacity,
                                    size_t *written);

/*
 Writes the `d x C` weights of point `index` feature-major:
 `buffer[i*C + c]` is the weight of feature `i` for class `c`.
 */
enum L20fsStatus l20fs_path_weights(const struct L20fsPath *path,
                                    size_t index,
                                    double *buffer,
                                    size_t capacity);

/*
 Writes the `C` intercepts of point `index`.
 */
enum L20fsStatus l20fs_path_bias(const struct L20fsPath *path,
                                 size_t index,
                                 double *buffer,
                                 size_t capacity);

/*
 Index of the point whose support size is closest to `target`.
 */
enum L20fsStatus l20fs_select_by_count(const struct L20fsPath *path, size_t target, size_t *index);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* L20FS_H */
