#ifndef HYPERDUAL_H
#define HYPERDUAL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes.
typedef enum HdStatus {
  HD_STATUS_OK = 0,
  // Rejected input: bad weights, non-generic kappa, Im z <= 0, unparsable text.
  HD_STATUS_CONFIG = 1,
  // A Gamma pole or vanishing sine in a closed form.
  HD_STATUS_MATH = 2,
  // The contour could not be built.
  HD_STATUS_GEOMETRY = 3,
  // The integrand vanished or branch tracking failed.
  HD_STATUS_INTEGRAND = 4,
  // The quadrature missed its target.
  HD_STATUS_NO_CONVERGENCE = 5,
  HD_STATUS_ODE = 6,
  HD_STATUS_NULL_POINTER = 7,
  // A Rust panic was caught at the boundary.
  HD_STATUS_INTERNAL = 8,
} HdStatus;

// Outcome of a check, with its JSON rendering.
typedef struct HdReport HdReport;

// Validated weight data `(m1, m2, l1, l2, kappa)`.
typedef struct HdWeights HdWeights;

// A complex number.
typedef struct HdComplex {
  double re;
  double im;
} HdComplex;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// Valid until the next call on this thread.
const char *hd_last_error(void);

// Library version as a static NUL-terminated string.
const char *hd_version(void);

// Parses `a+bi`.
//
// # Safety
// `text` must be a NUL-terminated string and `out` valid for writes.
enum HdStatus hd_parse_complex(const char *text, struct HdComplex *out);

// Validates weight data and returns a handle.
//
// # Safety
// `out` must be valid for writes.
enum HdStatus hd_weights_new(struct HdComplex m1,
                             int64_t m2,
                             struct HdComplex l1,
                             int64_t l2,
                             double kappa,
                             struct HdWeights **out);

// # Safety
// `w` must come from [`hd_weights_new`] and not be used afterwards; null is ignored.
void hd_weights_free(struct HdWeights *w);

// The weights with the two pairs exchanged.
//
// # Safety
// `w` must be a live handle and `out` valid for writes.
enum HdStatus hd_weights_swapped(const struct HdWeights *w, struct HdWeights **out);

// Dimension of the weight subspace, `min(m2, l2) + 1`; 0 for a null handle.
//
// # Safety
// `w` must be a live handle or null.
size_t hd_weights_dim(const struct HdWeights *w);

// `K_{a,b}(z)`; `target <= 0` keeps the default quadrature target.
// `err` receives the relative error estimate and may be null.
//
// # Safety
// `w` must be a live handle, `out` valid for writes, `err` null or valid for writes.
enum HdStatus hd_integral_k(const struct HdWeights *w,
                            size_t a,
                            size_t b,
                            struct HdComplex z,
                            double target,
                            struct HdComplex *out,
                            double *err);

// `I_{a,b}(z) = C_b K_{a,b}(z)`, otherwise as [`hd_integral_k`].
//
// # Safety
// As for [`hd_integral_k`].
enum HdStatus hd_integral_i(const struct HdWeights *w,
                            size_t a,
                            size_t b,
                            struct HdComplex z,
                            double target,
                            struct HdComplex *out,
                            double *err);

// Closed-form ratio `K_{a,b}(m1, m2, l1, l2) / K_{a,b}(l1, l2, m1, m2)`.
//
// # Safety
// `w` must be a live handle and `out` valid for writes.
enum HdStatus hd_corollary_ratio(const struct HdWeights *w, size_t b, struct HdComplex *out);

// Closed form of the Selberg-type integral `J_l(m)`.
//
// # Safety
// `out` must be valid for writes.
enum HdStatus hd_selberg_closed(size_t l, struct HdComplex m, double kappa, struct HdComplex *out);

// Quadrature against closed form for `J_l(m)`.
//
// # Safety
// `out` must be valid for writes.
enum HdStatus hd_selberg_check(size_t l,
                               struct HdComplex m,
                               double kappa,
                               double tolerance,
                               struct HdReport **out);

// Entrywise gap between `Î(z)` on both sides of the duality.
//
// # Safety
// `w` must be a live handle and `out` valid for writes.
enum HdStatus hd_duality_check(const struct HdWeights *w,
                               struct HdComplex z,
                               double tolerance,
                               struct HdReport **out);

// Acceptance criterion `n` in 1..=8.
//
// # Safety
// `out` must be valid for writes.
enum HdStatus hd_criterion(size_t n, struct HdReport **out);

// 1 if the check passed, 0 if it failed or the handle is null.
//
// # Safety
// `r` must be a live report or null.
int32_t hd_report_pass(const struct HdReport *r);

// Largest recorded error of the check; NaN for a null handle.
//
// # Safety
// `r` must be a live report or null.
double hd_report_max_rel_err(const struct HdReport *r);

// JSON rendering, owned by the report; null for a null handle.
//
// # Safety
// `r` must be a live report or null.
const char *hd_report_json(const struct HdReport *r);

// # Safety
// `r` must come from a check and not be used afterwards; null is ignored.
void hd_report_free(struct HdReport *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HYPERDUAL_H */
