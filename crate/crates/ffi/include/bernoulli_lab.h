#ifndef BERNOULLI_LAB_H
#define BERNOULLI_LAB_H

#include <stddef.h>
#include <stdint.h>

// Result code of every fallible call.
typedef enum BlStatus {
  BL_STATUS_OK = 0,
  // A required pointer was null, a buffer too short, or a string not UTF-8.
  BL_STATUS_INVALID_ARGUMENT = 1,
  BL_STATUS_INVALID_INPUT = 2,
  BL_STATUS_DEGENERATE_BODY = 3,
  BL_STATUS_GRID_MISMATCH = 4,
  BL_STATUS_NEWTON_DIVERGENCE = 5,
  BL_STATUS_CONVEXITY_LOSS = 6,
  BL_STATUS_GRID_TOO_COARSE = 7,
  BL_STATUS_TRIAL_DIVERGENCE = 8,
  BL_STATUS_BRACKET_INVERSION = 9,
  BL_STATUS_INFEASIBLE_TAU = 10,
  // Any other library error (linear solve, I/O, optimization).
  BL_STATUS_SOLVER_FAILURE = 11,
  // A panic was caught at the boundary.
  BL_STATUS_INTERNAL = 12,
} BlStatus;

// A body sampled on the direction grid of some [`BlParams`].
typedef struct BlBody BlBody;

// Grid and solver settings shared by all solves.
typedef struct BlParams BlParams;

// A converged ring solution.
typedef struct BlRing BlRing;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null if the last call
// succeeded. The pointer stays valid until the next call on this thread.
const char *bl_last_error_message(void);

// Library version as a static NUL-terminated string.
const char *bl_version(void);

// Closed-form Bernoulli constant of the ball of radius `radius` in R^`n`.
// Returns NaN unless `radius > 0`, `p > 1` and `n ≥ 2`.
double bl_lambda_ball(double radius, double p, uint32_t n);

// Creates solver settings for exponent `p` on `directions × levels` nodes.
//
// # Safety
// `out` must be a valid pointer to writable storage for one handle.
enum BlStatus bl_params_new(double p, size_t directions, size_t levels, struct BlParams **out);

// Sets the Newton residual tolerance.
//
// # Safety
// `params` must be a live handle from [`bl_params_new`].
enum BlStatus bl_params_set_newton_tol(struct BlParams *params, double tol);

// # Safety
// `params` must be null or a handle from [`bl_params_new`] not yet freed.
void bl_params_free(struct BlParams *params);

// Samples the body described by the JSON document `json` (for example
// `{"ellipse":{"a":2,"b":1}}`) on the direction grid of `params`.
//
// # Safety
// `json` must be a NUL-terminated string, `params` a live handle and `out`
// valid storage for one handle.
enum BlStatus bl_body_from_json(const char *json,
                                const struct BlParams *params,
                                struct BlBody **out);

// Number of directions of the body's grid (0 for a null handle).
//
// # Safety
// `body` must be null or a live handle.
size_t bl_body_len(const struct BlBody *body);

// Copies the support values `h(θ_j)`, `θ_j = 2πj/M`, into `out[0..len]`;
// `len` must be at least [`bl_body_len`].
//
// # Safety
// `body` must be a live handle and `out` must point to `len` writable doubles.
enum BlStatus bl_body_values(const struct BlBody *body, double *out, size_t len);

// Mean width `b = (1/π) ∮ h dθ` of the body.
//
// # Safety
// `body` must be a live handle.
double bl_body_mean_width(const struct BlBody *body);

// # Safety
// `body` must be null or a handle not yet freed.
void bl_body_free(struct BlBody *body);

// Bernoulli constant of `omega`: writes the estimate and its bracket.
// `bisect_tol ≤ 0` selects the default relative bracket width.
//
// # Safety
// Handles must be live; `lambda`, `lo`, `hi` must be writable (`lo` and `hi`
// may be null).
enum BlStatus bl_lambda(const struct BlBody *omega,
                        const struct BlParams *params,
                        double bisect_tol,
                        double *lambda,
                        double *lo,
                        double *hi);

// Exterior problem: the domain `Ω ⊃ K` with `|Du| = tau` on `∂Ω`.
// `fp_tol ≤ 0` selects the default.
//
// # Safety
// Handles must be live and `omega_out` valid storage for one handle.
enum BlStatus bl_solve_exterior(const struct BlBody *k,
                                double tau,
                                const struct BlParams *params,
                                double fp_tol,
                                struct BlBody **omega_out);

// Interior problem: the largest `K ⊂ Ω` with `|Du| = tau` on `∂K`.
// On success `*feasible` is 1 and `*k_out` holds `K`; when the trial
// iteration degenerates (`tau` below the Bernoulli constant) `*feasible`
// is 0, `*k_out` is null and the status is still `Ok`.
//
// # Safety
// Handles must be live; `k_out` and `feasible` must be writable.
enum BlStatus bl_solve_interior(const struct BlBody *omega,
                                double tau,
                                const struct BlParams *params,
                                double fp_tol,
                                struct BlBody **k_out,
                                int32_t *feasible);

// Capacitary potential of the ring `outer ∖ inner`.
//
// # Safety
// Handles must be live and `out` valid storage for one handle.
enum BlStatus bl_solve_ring(const struct BlBody *outer,
                            const struct BlBody *inner,
                            const struct BlParams *params,
                            struct BlRing **out);

// Writes the number of directions `M` and of level intervals `L`.
//
// # Safety
// `ring` must be live; `m` and `l` writable.
enum BlStatus bl_ring_shape(const struct BlRing *ring, size_t *m, size_t *l);

// Copies the ring field, stored level by level: `out[k*M + j]` is the
// support value of the level `t_k = k/L` in direction `θ_j`.
//
// # Safety
// `ring` must be live and `out` must point to `len ≥ M (L + 1)` doubles.
enum BlStatus bl_ring_values(const struct BlRing *ring, double *out, size_t len);

// Levelwise Minkowski combination of `n` rings with `weights`; writes the
// smallest interior value of the p-Laplacian sign residual and the band
// below which it counts as zero (a nonnegative value, up to the band,
// certifies a subsolution).
//
// # Safety
// `weights` and `rings` must point to `n` entries, each ring a live handle.
enum BlStatus bl_ring_combination_sign(const double *weights,
                                       const struct BlRing *const *rings,
                                       size_t n,
                                       double *min_value,
                                       double *sign_tol);

// # Safety
// `ring` must be null or a handle not yet freed.
void bl_ring_free(struct BlRing *ring);

// Runs the named verification suite with the JSON configuration `config`
// (null for the built-in one). Writes the JSON report array to
// `*reports_json` (release with [`bl_string_free`]) and whether every check
// passed to `*all_pass`.
//
// # Safety
// `suite` must be a NUL-terminated string, `config` null or one, and the
// output pointers writable.
enum BlStatus bl_verify(const char *suite,
                        const char *config,
                        size_t jobs,
                        char **reports_json,
                        int32_t *all_pass);

// Releases a string returned by this library.
//
// # Safety
// `s` must be null or a string returned by [`bl_verify`], not yet freed.
void bl_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BERNOULLI_LAB_H */
