#ifndef CKBALLS_H
#define CKBALLS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CkStatus {
  CK_OK = 0,
  CK_NULL_POINTER = 1,
  CK_INVALID_ARGUMENT = 2,
  CK_DIMENSION_MISMATCH = 3,
  CK_NOT_HERMITIAN = 4,
  CK_NOT_INVERTIBLE = 5,
  CK_NO_CONVERGENCE = 6,
  CK_PRECONDITION = 7,
  CK_INTERNAL = 8,
  CK_PANIC = 9,
} CkStatus;

typedef enum CkMembership {
  CK_NON_MEMBER = 0,
  CK_MEMBER = 1,
  CK_UNKNOWN = 2,
} CkMembership;

// A built curve sequence with its envelope.
typedef struct CkEnvelope CkEnvelope;

// A finite set of Schur-ideal generators.
typedef struct CkIdeal CkIdeal;

// A membership oracle.
typedef struct CkOracle CkOracle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Length in bytes of the last error message on this thread, without the
// terminating NUL; 0 when there is none.
size_t ck_last_error_length(void);

// Copies the last error message into `buf` (NUL-terminated, truncated to
// `len - 1` bytes). Returns the number of bytes written excluding the NUL.
//
// # Safety
// `buf` must be valid for `len` bytes or null.
size_t ck_last_error_message(char *buf, size_t len);

// Pick body with nodes `alpha` (`2k` doubles).
//
// # Safety
// `alpha` must hold `2k` doubles; `out` must be writable.
enum CkStatus ck_oracle_pick(const double *alpha, size_t k, double tol, struct CkOracle **out);

// Unit ball `||Q^{1/2} Diag(w) Q^{-1/2}|| <= 1` for PSD invertible `Q`.
//
// # Safety
// `q` must hold `2k^2` doubles; `out` must be writable.
enum CkStatus ck_oracle_idempotent(const double *q, size_t k, double tol, struct CkOracle **out);

// Perp ball of an ideal; the ideal handle is not consumed.
//
// # Safety
// `ideal` must be a live handle; `out` must be writable.
enum CkStatus ck_oracle_perp(const struct CkIdeal *ideal, double tol, struct CkOracle **out);

// Writes the membership of `w` (`2k` doubles) to `out`.
//
// # Safety
// `oracle` must be live, `w` must hold `2k` doubles, `out` writable.
enum CkStatus ck_oracle_membership(const struct CkOracle *oracle,
                                   const double *w,
                                   size_t k,
                                   enum CkMembership *out);

// Minkowski norm of `w` by bisection on the oracle.
//
// # Safety
// `oracle` must be live, `w` must hold `2k` doubles, `out` writable.
enum CkStatus ck_oracle_norm(const struct CkOracle *oracle, const double *w, size_t k, double *out);

// Dimension `k` of the oracle, or 0 for null.
//
// # Safety
// `oracle` must be live or null.
size_t ck_oracle_dim(const struct CkOracle *oracle);

// # Safety
// `oracle` must come from a `ck_oracle_*` constructor, or be null.
void ck_oracle_free(struct CkOracle *oracle);

// Ideal generated by `n_gens` PSD `k x k` matrices stored back to back.
//
// # Safety
// `gens` must hold `2 n_gens k^2` doubles; `out` must be writable.
enum CkStatus ck_ideal_new(const double *gens,
                           size_t n_gens,
                           size_t k,
                           double tol,
                           struct CkIdeal **out);

// Boundedness constant `delta` (0 for a trivial ideal).
//
// # Safety
// `ideal` must be live; `out` writable.
enum CkStatus ck_ideal_delta(const struct CkIdeal *ideal, double *out);

// Writes 1 when the ideal is non-trivial, else 0.
//
// # Safety
// `ideal` must be live; `out` writable.
enum CkStatus ck_ideal_nontrivial(const struct CkIdeal *ideal, int32_t *out);

// Perp membership of `w` (`2k` doubles).
//
// # Safety
// `ideal` must be live, `w` must hold `2k` doubles, `out` writable.
enum CkStatus ck_ideal_perp_membership(const struct CkIdeal *ideal,
                                       const double *w,
                                       size_t k,
                                       double tol,
                                       enum CkMembership *out);

// # Safety
// `ideal` must come from [`ck_ideal_new`], or be null.
void ck_ideal_free(struct CkIdeal *ideal);

// Builds `n_curves` curves starting at `(a0, c0)` with bisected endpoints.
//
// # Safety
// `out` must be writable.
enum CkStatus ck_envelope_build(size_t n_curves,
                                double a0,
                                double c0,
                                double jump_min,
                                struct CkEnvelope **out);

// Number of breakpoints (`n_curves - 1`), or 0 for null.
//
// # Safety
// `env` must be live or null.
size_t ck_envelope_breakpoint_count(const struct CkEnvelope *env);

// Copies up to `len` breakpoints into `out`; writes the number copied to
// `written`.
//
// # Safety
// `env` must be live; `out` valid for `len` doubles; `written` writable.
enum CkStatus ck_envelope_breakpoints(const struct CkEnvelope *env,
                                      double *out,
                                      size_t len,
                                      size_t *written);

// Envelope value at `u` and the 0-based index of the active curve.
//
// # Safety
// `env` must be live; `f` and `active` writable.
enum CkStatus ck_envelope_eval(const struct CkEnvelope *env, double u, double *f, size_t *active);

// Writes 1 when every structural invariant re-checks, else 0.
//
// # Safety
// `env` must be live; `out` writable.
enum CkStatus ck_envelope_invariants_hold(const struct CkEnvelope *env, int32_t *out);

// # Safety
// `env` must come from [`ck_envelope_build`], or be null.
void ck_envelope_free(struct CkEnvelope *env);

// `f_{a,c}(u)`.
//
// # Safety
// `out` must be writable.
enum CkStatus ck_f_ac(double a, double c, double u, double *out);

// `d/du f_{a,c}(u)`.
//
// # Safety
// `out` must be writable.
enum CkStatus ck_f_ac_prime(double a, double c, double u, double *out);

// Crossing abscissa of `f_{a1,c1}` and `f_{a2,c2}`.
//
// # Safety
// `out` must be writable.
enum CkStatus ck_curve_intersection(double a1, double c1, double a2, double c2, double *out);

// Membership of `(0, x, y)` in the perp of `P_{a,c}`.
//
// # Safety
// `out` must be writable.
enum CkStatus ck_pac_slice_membership(double a,
                                      double c,
                                      double x,
                                      double y,
                                      double tol,
                                      enum CkMembership *out);

// Norm of `w` in `C^2` (4 doubles) for the ball generated by `(1, -1)`.
//
// # Safety
// `w` must hold 4 doubles; `out` writable.
enum CkStatus ck_example24_norm(const double *w, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CKBALLS_H */
