#ifndef CONEWIDTH_H
#define CONEWIDTH_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CwStatus {
  CW_STATUS_OK = 0,
  CW_STATUS_NULL_POINTER = 1,
  CW_STATUS_INVALID_ARGUMENT = 2,
  CW_STATUS_IO = 3,
  CW_STATUS_FORMAT = 4,
  // The brute-force oracle refused a grid above its node budget.
  CW_STATUS_BUDGET_EXCEEDED = 5,
  // A construction or certificate precondition did not hold.
  CW_STATUS_COMPUTATION = 6,
  CW_STATUS_PANIC = 7,
} CwStatus;

// Scalar field sampled on grid nodes.
typedef struct CwField CwField;

// Rasterized open set on a planar grid.
typedef struct CwGridSet CwGridSet;

// Finite planar point set, optionally with normal data.
typedef struct CwPointCloud CwPointCloud;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// The pointer stays valid until the next call on the same thread.
const char *cw_last_error(void);

// Library version as a static NUL-terminated string.
const char *cw_version(void);

// Grid set on `nx × ny` cells of side `spacing` with lower-left corner
// `(origin_x, origin_y)`. `occupancy` has `nx*ny` bytes, x fastest; nonzero
// marks an occupied cell. `padding` empty cells are added on every side.
//
// # Safety
// `occupancy` must point to `nx*ny` readable bytes and `out` must be writable.
enum CwStatus cw_grid_set_new(double origin_x,
                              double origin_y,
                              double spacing,
                              size_t nx,
                              size_t ny,
                              size_t padding,
                              const uint8_t *occupancy,
                              struct CwGridSet **out);

// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum CwStatus cw_grid_set_read_pbm(const char *path, struct CwGridSet **out);

// # Safety
// `set` must be a live handle and `path` a NUL-terminated string.
enum CwStatus cw_grid_set_write_pbm(const struct CwGridSet *set, const char *path);

// # Safety
// `set` must be a live handle and `out` writable.
enum CwStatus cw_grid_set_count(const struct CwGridSet *set, size_t *out);

// # Safety
// `set` must be NULL or a handle not yet freed.
void cw_grid_set_free(struct CwGridSet *set);

// Width of `set` for the cone with axis `(axis_x, axis_y)` and `aperture`,
// over lattice paths with steps up to `s_max`.
//
// # Safety
// `set` must be a live handle and `out` writable.
enum CwStatus cw_width(const struct CwGridSet *set,
                       double axis_x,
                       double axis_y,
                       double aperture,
                       size_t s_max,
                       double *out);

// Exhaustive path enumeration; small grids only.
//
// # Safety
// `set` must be a live handle and `out` writable.
enum CwStatus cw_width_brute_force(const struct CwGridSet *set,
                                   double axis_x,
                                   double axis_y,
                                   double aperture,
                                   size_t s_max,
                                   double *out);

// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum CwStatus cw_point_cloud_read_csv(const char *path, struct CwPointCloud **out);

// Four-corner Cantor set at `depth` (4^depth points).
//
// # Safety
// `out` must be writable.
enum CwStatus cw_point_cloud_four_corner(uint32_t depth, struct CwPointCloud **out);

// # Safety
// `out` must be writable.
enum CwStatus cw_point_cloud_cantor_product(double ratio,
                                            uint32_t depth,
                                            size_t y_samples,
                                            struct CwPointCloud **out);

// # Safety
// `pc` must be a live handle and `out` writable.
enum CwStatus cw_point_cloud_len(const struct CwPointCloud *pc, size_t *out);

// Coordinates of point `index` into `xy[0..2]`.
//
// # Safety
// `pc` must be a live handle and `xy` must have room for two doubles.
enum CwStatus cw_point_cloud_point(const struct CwPointCloud *pc, size_t index, double *xy);

// # Safety
// `pc` must be NULL or a handle not yet freed.
void cw_point_cloud_free(struct CwPointCloud *pc);

// # Safety
// `path` must be a NUL-terminated string and `out` writable.
enum CwStatus cw_field_read(const char *path, struct CwField **out);

// # Safety
// `field` must be a live handle and `path` a NUL-terminated string.
enum CwStatus cw_field_write(const struct CwField *field, const char *path);

// Multilinear interpolation at `(x, y)`.
//
// # Safety
// `field` must be a live handle and `out` writable.
enum CwStatus cw_field_evaluate(const struct CwField *field, double x, double y, double *out);

// # Safety
// `field` must be a live handle and `out` writable.
enum CwStatus cw_field_lipschitz(const struct CwField *field, double *out);

// # Safety
// `field` must be NULL or a handle not yet freed.
void cw_field_free(struct CwField *field);

// Theorem-9 pipeline on the square `[lo, hi]²` at spacing `h` with `steps`
// directions; stage assertion failures are recorded, not fatal.
//
// # Safety
// `pc` must be a live handle and `out` writable.
enum CwStatus cw_build_theorem9(const struct CwPointCloud *pc,
                                double lo,
                                double hi,
                                double h,
                                size_t steps,
                                struct CwField **out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONEWIDTH_H */
