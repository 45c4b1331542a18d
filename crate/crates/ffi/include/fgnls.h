#ifndef FGNLS_H
#define FGNLS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FgnlsStatus {
  FGNLS_STATUS_OK = 0,
  FGNLS_STATUS_NULL_POINTER = 1,
  /**
   * Invalid surface data or arguments.
   */
  FGNLS_STATUS_INVALID_INPUT = 2,
  /**
   * Quadrature, theta or linear-algebra failure.
   */
  FGNLS_STATUS_NUMERICAL = 3,
  /**
   * An array length does not match the genus.
   */
  FGNLS_STATUS_DIMENSION = 4,
  /**
   * Internal panic caught at the boundary.
   */
  FGNLS_STATUS_PANIC = 5,
} FgnlsStatus;

/**
 * Surface together with its periods and theta data.
 */
typedef struct FgnlsContext FgnlsContext;

/**
 * Validated hyperelliptic surface.
 */
typedef struct FgnlsSurface FgnlsSurface;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Focusing surface from the `n` upper endpoints `re[j] + i·im[j]` of the vertical cuts.
 *
 * # Safety
 * `re` and `im` must point to `n` doubles; `out` must be writable.
 */
enum FgnlsStatus fgnls_surface_focusing(const double *re,
                                        const double *im,
                                        size_t n,
                                        struct FgnlsSurface **out);

/**
 * Defocusing surface from the `n` real bands `(beta[j], alpha[j])`.
 *
 * # Safety
 * `beta` and `alpha` must point to `n` doubles; `out` must be writable.
 */
enum FgnlsStatus fgnls_surface_defocusing(const double *beta,
                                          const double *alpha,
                                          size_t n,
                                          struct FgnlsSurface **out);

/**
 * Surface from its JSON description (`{"mode": ..., "alphas": ...}` or `{"bands": ...}`).
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum FgnlsStatus fgnls_surface_from_json(const char *json, struct FgnlsSurface **out);

/**
 * # Safety
 * `surface` must come from a surface constructor and not be used afterwards.
 */
void fgnls_surface_free(struct FgnlsSurface *surface);

/**
 * Genus of the surface, 0 for a null handle.
 *
 * # Safety
 * `surface` must be null or a live handle.
 */
size_t fgnls_surface_genus(const struct FgnlsSurface *surface);

/**
 * `Σ b_j`, the amplitude bound; NaN for a null handle.
 *
 * # Safety
 * `surface` must be null or a live handle.
 */
double fgnls_surface_band_sum(const struct FgnlsSurface *surface);

/**
 * Computes periods and theta data. `tol` is the quadrature tolerance, `0` for the default.
 *
 * # Safety
 * `surface` must be a live handle; `out` must be writable.
 */
enum FgnlsStatus fgnls_context_new(const struct FgnlsSurface *surface,
                                   double tol,
                                   struct FgnlsContext **out);

/**
 * # Safety
 * `ctx` must come from [`fgnls_context_new`] and not be used afterwards.
 */
void fgnls_context_free(struct FgnlsContext *ctx);

/**
 * # Safety
 * `ctx` must be null or a live handle.
 */
size_t fgnls_context_genus(const struct FgnlsContext *ctx);

/**
 * Period matrix `τ`, `g·g` entries row-major.
 *
 * # Safety
 * `re` and `im` must each hold `len` doubles.
 */
enum FgnlsStatus fgnls_period_matrix(const struct FgnlsContext *ctx,
                                     double *re,
                                     double *im,
                                     size_t len);

/**
 * Wavenumber and frequency vectors `V`, `W` of the phase `Ω = Vx + Wt + Ω⁰`.
 *
 * # Safety
 * `v` and `w` must each hold `len` doubles.
 */
enum FgnlsStatus fgnls_flow_vectors(const struct FgnlsContext *ctx,
                                    double *v,
                                    double *w,
                                    size_t len);

/**
 * Amplitude ratio `f(Ω)`.
 *
 * # Safety
 * `omega` must hold `len` doubles; `re`, `im` must be writable.
 */
enum FgnlsStatus fgnls_f_value(const struct FgnlsContext *ctx,
                               const double *omega,
                               size_t len,
                               double *re,
                               double *im);

/**
 * `ψ(x, t)` for initial phase `Ω⁰`, including the plane-wave factor.
 *
 * # Safety
 * `omega0` must hold `len` doubles; `re`, `im` must be writable.
 */
enum FgnlsStatus fgnls_psi(const struct FgnlsContext *ctx,
                           double x,
                           double t,
                           const double *omega0,
                           size_t len,
                           double *re,
                           double *im);

/**
 * `Θ(z; τ)` at `z = z_re + i·z_im`.
 *
 * # Safety
 * `z_re`, `z_im` must hold `len` doubles; `re`, `im` must be writable.
 */
enum FgnlsStatus fgnls_theta(const struct FgnlsContext *ctx,
                             const double *z_re,
                             const double *z_im,
                             size_t len,
                             double *re,
                             double *im);

/**
 * Largest defect of the jump condition of `Y` over `samples` points per cut.
 *
 * # Safety
 * `omega` must hold `len` doubles; `out` must be writable.
 */
enum FgnlsStatus fgnls_jump_residual(const struct FgnlsContext *ctx,
                                     const double *omega,
                                     size_t len,
                                     size_t samples,
                                     double *out);

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated, truncated to
 * `len`) and returns the full message length excluding the terminator.
 *
 * # Safety
 * `buf` must be null or hold `len` bytes.
 */
size_t fgnls_last_error_message(char *buf, size_t len);

/**
 * Static description of a status code.
 */
const char *fgnls_status_string(enum FgnlsStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FGNLS_H */
