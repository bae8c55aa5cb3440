/* C interface to the floquet-bilayer solver. */

#ifndef FLOQUET_BILAYER_H
#define FLOQUET_BILAYER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Status codes shared by every entry point.
typedef enum FbStatus {
  FB_STATUS_OK = 0,
  // Null pointer, bad length, or invalid parameter value.
  FB_STATUS_INVALID_ARGUMENT = 1,
  // A required sideband has an imaginary wavenumber.
  FB_STATUS_INADMISSIBLE = 2,
  // A matching matrix is singular (marginal or degenerate setup).
  FB_STATUS_DEGENERATE = 3,
  // Evaluation outside the layer's z-domain.
  FB_STATUS_DOMAIN = 4,
  // Internal failure; see fb_last_error.
  FB_STATUS_INTERNAL = 5,
} FbStatus;

// Opaque solution handle.
typedef struct FbSolution FbSolution;

// Model parameters in dimensionless units.
typedef struct FbParams {
  double omega;
  double j1;
  double eps_xy;
  double quasi_energy;
  double u0;
  double alpha_kx;
  double beta_ky;
  double b;
  int64_t m_base;
  uint32_t n_len;
} FbParams;

// Headline verification figures for one solution.
typedef struct FbVerifySummary {
  double residual_algebraic;
  double continuity_value;
  double continuity_deriv;
  double boundary_value;
  // 1 when every figure is within the default tolerances.
  int32_t pass;
} FbVerifySummary;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Check whether every required sideband carries a real wavenumber.
// `accept` receives 1/0; on rejection `bad_index` gets the first
// offending sideband index.
//
// # Safety
// `params` must be valid; out-pointers may be null to skip them.
enum FbStatus fb_admissible(const struct FbParams *params, int32_t *accept, int64_t *bad_index);

// Construct a solution from `free_len` complex free constants supplied
// as interleaved (re, im) doubles; `free_len` must equal `2 * n_len`.
// On success `*out` owns the handle.
//
// # Safety
// `free_re_im` must point to `2 * free_len` doubles; `out` must be a
// valid pointer.
enum FbStatus fb_solve(const struct FbParams *params,
                       const double *free_re_im,
                       uintptr_t free_len,
                       struct FbSolution **out);

// Release a handle produced by `fb_solve`. Null is a no-op.
//
// # Safety
// `sol` must be null or a pointer returned by `fb_solve`.
void fb_solution_free(struct FbSolution *sol);

// Evaluate the spinor field at (z, t); `out_spinor` receives
// (re_up, im_up, re_down, im_down). z <= 0 addresses the left layer,
// z in (0, b] the right one.
//
// # Safety
// `out_spinor` must point to 4 doubles.
enum FbStatus fb_eval(const struct FbSolution *sol, double z, double t, double *out_spinor);

// Evaluate the z-derivative of the spinor field at (z, t).
//
// # Safety
// As `fb_eval`.
enum FbStatus fb_eval_dz(const struct FbSolution *sol, double z, double t, double *out_spinor);

// Largest coefficient magnitude of the solution (the scale used by
// relative tolerances). Returns 0 for a null handle.
//
// # Safety
// `sol` must be null or a valid handle.
double fb_solution_scale(const struct FbSolution *sol);

// Run the exact per-mode residual and the matching report, filling the
// summary.
//
// # Safety
// `out` must be a valid pointer.
enum FbStatus fb_verify(const struct FbSolution *sol, struct FbVerifySummary *out);

// Serialize the solution's coefficient table as a JSON document (the
// same schema the CLI writes). The returned string is owned by the
// caller and must be released with `fb_string_free`. Returns null on
// failure.
//
// # Safety
// `sol` must be a valid handle.
char *fb_coefficients_json(const struct FbSolution *sol);

// Release a string returned by `fb_coefficients_json`.
//
// # Safety
// `text` must be null or a pointer returned by this library.
void fb_string_free(char *text);

// Message for the most recent failure on this thread. The pointer stays
// valid until the next failing call on the same thread.
const char *fb_last_error(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FLOQUET_BILAYER_H */
