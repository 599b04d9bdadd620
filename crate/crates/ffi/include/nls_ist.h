#ifndef NLS_IST_H
#define NLS_IST_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes. `NLS_OK` is zero; everything else is an error.
 */
typedef enum NlsStatus {
  NLS_OK = 0,
  NLS_INVALID_SAMPLE = 1,
  NLS_INVALID_INPUT = 2,
  NLS_DOMAIN = 3,
  NLS_ACCURACY = 4,
  NLS_SPECTRAL_SINGULARITY = 5,
  NLS_COUNT_MISMATCH = 6,
  NLS_POLE_NEAR_BOUNDARY = 7,
  NLS_DEPENDENCE = 8,
  NLS_SINGULAR_SYSTEM = 9,
  NLS_NUMERICAL = 10,
  NLS_IO = 11,
  NLS_NULL_POINTER = 12,
  NLS_BUFFER_TOO_SMALL = 13,
  NLS_PANIC = 14,
} NlsStatus;

/**
 * Sampled potential handle.
 */
typedef struct NlsPotential NlsPotential;

/**
 * Scattering data handle.
 */
typedef struct NlsScattering NlsScattering;

/**
 * Soliton parameter handle.
 */
typedef struct NlsSolitonParams NlsSolitonParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Last error message on this thread, or null if none. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *nls_last_error_message(void);

/**
 * Releases a string returned by this library.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void nls_string_free(char *s);

/**
 * Creates a potential from `n` samples on `[x_min, x_max]`.
 *
 * # Safety
 * `re` and `im` must point to `n` doubles; `out` must be writable.
 */
enum NlsStatus nls_potential_new(double x_min,
                                 double x_max,
                                 const double *re,
                                 const double *im,
                                 size_t n,
                                 struct NlsPotential **out);

/**
 * Loads a potential from a CSV or JSON file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum NlsStatus nls_potential_load(const char *path, struct NlsPotential **out);

/**
 * # Safety
 * `p` must come from `nls_potential_new`/`nls_potential_load` or be null.
 */
void nls_potential_free(struct NlsPotential *p);

/**
 * Number of samples, or 0 for a null handle.
 *
 * # Safety
 * `p` must be a live handle or null.
 */
size_t nls_potential_len(const struct NlsPotential *p);

/**
 * `a(z)` for `Im z ≥ 0`.
 *
 * # Safety
 * `p` must be a live handle; outputs must be writable.
 */
enum NlsStatus nls_transmission_a(const struct NlsPotential *p,
                                  double z_re,
                                  double z_im,
                                  double *out_re,
                                  double *out_im);

/**
 * Full forward transform with default tolerances: `r` on `grid`, zeros
 * of `a` inside the box and their norming constants.
 *
 * # Safety
 * `p` must be a live handle, `grid` must hold `n_grid` doubles and `out`
 * must be writable.
 */
enum NlsStatus nls_scatter(const struct NlsPotential *p,
                           const double *grid,
                           size_t n_grid,
                           double re_min,
                           double re_max,
                           double im_min,
                           double im_max,
                           struct NlsScattering **out);

/**
 * # Safety
 * `s` must come from `nls_scatter` or be null.
 */
void nls_scattering_free(struct NlsScattering *s);

/**
 * Number of poles, or 0 for a null handle.
 *
 * # Safety
 * `s` must be a live handle or null.
 */
size_t nls_scattering_pole_count(const struct NlsScattering *s);

/**
 * Copies poles and couplings into caller arrays of capacity `cap`.
 *
 * # Safety
 * `s` must be a live handle; each output must hold `cap` doubles.
 */
enum NlsStatus nls_scattering_poles(const struct NlsScattering *s,
                                    double *poles_re,
                                    double *poles_im,
                                    double *couplings_re,
                                    double *couplings_im,
                                    size_t cap);

/**
 * Copies `r` on the real grid into caller arrays of capacity `cap`.
 *
 * # Safety
 * `s` must be a live handle; each output must hold `cap` doubles.
 */
enum NlsStatus nls_scattering_reflection(const struct NlsScattering *s,
                                         double *r_re,
                                         double *r_im,
                                         size_t cap);

/**
 * Scattering data as a JSON document; free with `nls_string_free`.
 * Returns null on failure.
 *
 * # Safety
 * `s` must be a live handle or null.
 */
char *nls_scattering_to_json(const struct NlsScattering *s);

/**
 * Creates soliton parameters from `n` poles and couplings.
 *
 * # Safety
 * Each input array must hold `n` doubles; `out` must be writable.
 */
enum NlsStatus nls_soliton_new(const double *poles_re,
                               const double *poles_im,
                               const double *couplings_re,
                               const double *couplings_im,
                               size_t n,
                               struct NlsSolitonParams **out);

/**
 * # Safety
 * `p` must come from `nls_soliton_new` or be null.
 */
void nls_soliton_free(struct NlsSolitonParams *p);

/**
 * N-soliton value `u(x, t)`.
 *
 * # Safety
 * `p` must be a live handle; outputs must be writable.
 */
enum NlsStatus nls_soliton_eval(const struct NlsSolitonParams *p,
                                double x,
                                double t,
                                double *out_re,
                                double *out_im);

/**
 * Closed-form 1-soliton.
 *
 * # Safety
 * Outputs must be writable.
 */
enum NlsStatus nls_one_soliton(double z_re,
                               double z_im,
                               double c_re,
                               double c_im,
                               double x,
                               double t,
                               double *out_re,
                               double *out_im);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NLS_IST_H */
