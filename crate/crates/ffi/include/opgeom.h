#ifndef OPGEOM_H
#define OPGEOM_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes returned by every function.
typedef enum OpgeomStatus {
  OPGEOM_STATUS_OK = 0,
  OPGEOM_STATUS_NULL_POINTER = 1,
  OPGEOM_STATUS_INVALID_ARGUMENT = 2,
  OPGEOM_STATUS_NOT_IN_CPSI = 3,
  OPGEOM_STATUS_DEGENERATE_OPERATOR = 4,
  OPGEOM_STATUS_TRUNCATION_BUDGET_EXCEEDED = 5,
  OPGEOM_STATUS_QUADRATURE_NON_CONVERGENCE = 6,
  OPGEOM_STATUS_SINGULAR_SYSTEM = 7,
  OPGEOM_STATUS_PSI_RATIO_OVERFLOW = 8,
  OPGEOM_STATUS_UNSUPPORTED = 9,
  OPGEOM_STATUS_INTERNAL = 10,
} OpgeomStatus;

// Geometric-series computation path.
typedef enum OpgeomMethod {
  OPGEOM_METHOD_NEUMANN = 0,
  OPGEOM_METHOD_SOLVE = 1,
} OpgeomMethod;

// A function on [0, 1].
typedef struct OpgeomFunction OpgeomFunction;

// A positive linear operator (family, order and parameters).
typedef struct OpgeomOperator OpgeomOperator;

// A computed geometric series G_L(f).
typedef struct OpgeomSeries OpgeomSeries;

// Grid statistics of α = 1 − L(ψ)/ψ.
typedef struct OpgeomAlphaStats {
  double nu;
  double eta;
  double b_norm;
} OpgeomAlphaStats;

// Diagnostics of a geometric-series result.
typedef struct OpgeomSeriesInfo {
  uint64_t terms_used;
  double tail_bound;
  double truncation_bound;
  double residual_psi_norm;
  double b_norm;
  double f_psi_norm;
} OpgeomSeriesInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the calling thread's last error message into `buf` (NUL-terminated,
// truncated to `len` bytes) and returns the full message length.
//
// # Safety
// `buf` must be null or point to `len` writable bytes.
size_t opgeom_last_error_message(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *opgeom_version(void);

// Creates an operator. `family` is one of "bernstein", "durrmeyer", "mkz",
// "mkz-reflected", "mkz-symmetric". `rho` is read for durrmeyer only and
// `truncation_eps` for the mkz families only (0 selects the default).
//
// # Safety
// `family` must be a NUL-terminated string; `out` must be writable.
enum OpgeomStatus opgeom_operator_new(const char *family,
                                      uint32_t n,
                                      double rho,
                                      double truncation_eps,
                                      struct OpgeomOperator **out);

// # Safety
// `op` must come from [`opgeom_operator_new`] and not be used afterwards.
void opgeom_operator_free(struct OpgeomOperator *op);

// L(f)(x).
//
// # Safety
// Handles must be live; `out` must be writable.
enum OpgeomStatus opgeom_operator_apply(const struct OpgeomOperator *op,
                                        const struct OpgeomFunction *f,
                                        double x,
                                        double *out);

// Central moment M^k(x) = L((t − x)^k)(x).
//
// # Safety
// `op` must be live; `out` must be writable.
enum OpgeomStatus opgeom_operator_moment(const struct OpgeomOperator *op,
                                         uint32_t k,
                                         double x,
                                         double *out);

// α(x) = 1 − L(ψ)(x)/ψ(x) at an interior x.
//
// # Safety
// `op` must be live; `out` must be writable.
enum OpgeomStatus opgeom_operator_alpha(const struct OpgeomOperator *op, double x, double *out);

// ν, η and ‖b_L‖ on a Chebyshev grid of `grid_size` points (0 = default),
// restricted to the operator's evaluation window.
//
// # Safety
// `op` must be live; `out` must be writable.
enum OpgeomStatus opgeom_operator_alpha_stats(const struct OpgeomOperator *op,
                                              size_t grid_size,
                                              struct OpgeomAlphaStats *out);

// A registry function: "e0".."e4", "psi", "sin_pi", "exp", "abs_half", "osc".
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum OpgeomStatus opgeom_function_registry(const char *name, struct OpgeomFunction **out);

// A function evaluated through `cb(x, user_data)`. The callback may be
// invoked from several threads at once and must stay valid until the
// handle and everything derived from it are freed.
//
// # Safety
// `out` must be writable; `user_data` must satisfy the above.
enum OpgeomStatus opgeom_function_from_callback(double (*cb)(double x, void *user_data),
                                                void *user_data,
                                                struct OpgeomFunction **out);

// f − B₁f.
//
// # Safety
// `f` must be live; `out` must be writable.
enum OpgeomStatus opgeom_function_project(const struct OpgeomFunction *f,
                                          struct OpgeomFunction **out);

// ψ·f.
//
// # Safety
// `f` must be live; `out` must be writable.
enum OpgeomStatus opgeom_function_psi_times(const struct OpgeomFunction *f,
                                            struct OpgeomFunction **out);

// # Safety
// `f` must be live; `out` must be writable.
enum OpgeomStatus opgeom_function_eval(const struct OpgeomFunction *f, double x, double *out);

// # Safety
// `f` must come from this library and not be used afterwards.
void opgeom_function_free(struct OpgeomFunction *f);

// Grid estimate of ‖f‖_ψ = sup |f|/ψ over a Chebyshev grid (0 = default size).
//
// # Safety
// `f` must be live; `out` must be writable.
enum OpgeomStatus opgeom_psi_norm(const struct OpgeomFunction *f, size_t grid_size, double *out);

// G_L(f) = Σ L^k f for f in C_ψ. `eps` ≤ 0 selects the family default; it
// is ignored by the solve path.
//
// # Safety
// Handles must be live; `out` must be writable.
enum OpgeomStatus opgeom_geometric_series(const struct OpgeomOperator *op,
                                          const struct OpgeomFunction *f,
                                          enum OpgeomMethod method,
                                          double eps,
                                          size_t grid_size,
                                          struct OpgeomSeries **out);

// G_L(f)(x) for any x in [0, 1].
//
// # Safety
// `s` must be live; `out` must be writable.
enum OpgeomStatus opgeom_series_eval(const struct OpgeomSeries *s, double x, double *out);

// # Safety
// `s` must be live; `out` must be writable.
enum OpgeomStatus opgeom_series_info(const struct OpgeomSeries *s, struct OpgeomSeriesInfo *out);

// Converts the series into a function handle (the series handle stays valid).
//
// # Safety
// `s` must be live; `out` must be writable.
enum OpgeomStatus opgeom_series_function(const struct OpgeomSeries *s, struct OpgeomFunction **out);

// # Safety
// `s` must come from [`opgeom_geometric_series`] and not be used afterwards.
void opgeom_series_free(struct OpgeomSeries *s);

// ‖(I − L)G f − f‖_ψ and ‖G(I − L)f − f‖_ψ.
//
// # Safety
// Handles must be live; `r7` and `r8` must be writable.
enum OpgeomStatus opgeom_inversion_residuals(const struct OpgeomOperator *op,
                                             const struct OpgeomFunction *f,
                                             double eps,
                                             size_t grid_size,
                                             double *r7,
                                             double *r8);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OPGEOM_H */
