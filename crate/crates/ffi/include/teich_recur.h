#ifndef TEICH_RECUR_H
#define TEICH_RECUR_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum TrStatus {
  TR_STATUS_OK = 0,
  TR_STATUS_NULL_POINTER = 1,
  TR_STATUS_INVALID_ARGUMENT = 2,
  TR_STATUS_PARSE = 3,
  TR_STATUS_BUDGET = 4,
  TR_STATUS_IO = 5,
  TR_STATUS_NUMERIC = 6,
  TR_STATUS_BUFFER_TOO_SMALL = 7,
  TR_STATUS_PANIC = 8,
} TrStatus;

typedef enum TrTailKind {
  /**
   * Exponential with mean `a`.
   */
  TR_TAIL_KIND_EXPONENTIAL = 0,
  /**
   * `P(X > x) = a·e^{-b x}` beyond `cutoff`.
   */
  TR_TAIL_KIND_EXPONENTIAL_TAIL = 1,
  /**
   * Constant `a`.
   */
  TR_TAIL_KIND_DETERMINISTIC = 2,
} TrTailKind;

/**
 * Opaque translation surface.
 */
typedef struct TrSurface TrSurface;

typedef struct TrTail {
  enum TrTailKind kind;
  double a;
  double b;
  double cutoff;
} TrTail;

typedef struct TrRate {
  double theta1;
  double gamma1;
  double theta2;
  double gamma2;
  double c;
  double gamma;
  double t_min;
} TrRate;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *tr_version(void);

/**
 * Message for the last failed call on this thread, or NULL.
 */
const char *tr_last_error(void);

/**
 * Builtin fixture: `torus`, `L3` or `octagon`.
 */
enum TrStatus tr_surface_builtin(const char *name, struct TrSurface **out);

/**
 * Surface from the text format read by the command-line tool.
 */
enum TrStatus tr_surface_parse(const char *source, struct TrSurface **out);

/**
 * Square-tiled surface from 0-based permutation images of length `n`:
 * square `i` has square `h[i]` to its right and `v[i]` above.
 */
enum TrStatus tr_surface_origami(size_t n,
                                 const uint32_t *h,
                                 const uint32_t *v,
                                 struct TrSurface **out);

/**
 * Releases a handle; NULL is ignored.
 */
void tr_surface_free(struct TrSurface *s);

enum TrStatus tr_surface_area(const struct TrSurface *s, double *out);

enum TrStatus tr_surface_genus(const struct TrSurface *s, size_t *out);

/**
 * `[[a, b], [c, d]]·s` with `ad − bc = 1`, Delaunay re-triangulated, as a new handle.
 */
enum TrStatus tr_surface_apply(const struct TrSurface *s,
                               double a,
                               double b,
                               double c,
                               double d,
                               struct TrSurface **out);

/**
 * Length of the shortest saddle connection; `budget = 0` means the default.
 */
enum TrStatus tr_shortest_saddle(const struct TrSurface *s, size_t budget, double *out);

/**
 * Sorted saddle-connection lengths up to `l`. Writes at most `cap` values to
 * `lengths` and the full count to `count`; returns `BUFFER_TOO_SMALL` when
 * the count exceeds `cap`. `lengths` may be NULL when `cap` is 0.
 */
enum TrStatus tr_saddle_lengths(const struct TrSurface *s,
                                double l,
                                size_t budget,
                                double *lengths,
                                size_t cap,
                                size_t *count);

/**
 * `V₀(s) = max(1, ℓ(s)^{-(1+δ)})`.
 */
enum TrStatus tr_v0(const struct TrSurface *s, double delta, double *out);

/**
 * One random walk; writes `V₀` at steps `0..=steps` (fewer if truncated)
 * and the number written to `len`. Needs `cap ≥ steps + 1`.
 */
enum TrStatus tr_walk(const struct TrSurface *s,
                      double tau,
                      double delta,
                      size_t steps,
                      uint64_t seed,
                      double *values,
                      size_t cap,
                      size_t *len);

/**
 * `D(φ)` for a circle of radius `t2` about a point at distance `t1` from `i`.
 */
enum TrStatus tr_polar_radius(double t1, double t2, double phi, double *out);

/**
 * `Ψ(φ)`, the direction at `i` of the same circle point.
 */
enum TrStatus tr_polar_angle(double t1, double t2, double phi, double *out);

enum TrStatus tr_polar_angle_derivative(double t1, double t2, double phi, double *out);

/**
 * `(V(x)/l)(c + b/l)^n`, the hitting-time tail bound under `PV ≤ cV + b`.
 */
enum TrStatus tr_hitting_bound(double v, double c, double b, double l, uint32_t n, double *out);

/**
 * Large-deviation rate of the outside occupation above `lambda`; `theta0 ≤ 0`
 * selects the smaller MGF domain limit of the two laws.
 */
enum TrStatus tr_deviation_rate(const struct TrTail *eta,
                                const struct TrTail *xi,
                                double lambda,
                                double theta0,
                                struct TrRate *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* TEICH_RECUR_H */
