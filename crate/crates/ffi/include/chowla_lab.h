#ifndef CHOWLA_LAB_H
#define CHOWLA_LAB_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ChlStatus {
  CHL_STATUS_OK = 0,
  CHL_STATUS_INVALID_ARGUMENT = 1,
  CHL_STATUS_BUDGET = 2,
  CHL_STATUS_EMPTY_PRIME_WINDOW = 3,
  CHL_STATUS_SUPPORT_MISMATCH = 4,
  CHL_STATUS_IO = 5,
  CHL_STATUS_NULL_POINTER = 6,
  CHL_STATUS_PANIC = 7,
} ChlStatus;

typedef enum ChlSignKind {
  CHL_SIGN_KIND_LIOUVILLE = 0,
  CHL_SIGN_KIND_MOBIUS = 1,
} ChlSignKind;

/**
 * Opaque multiplicative function.
 */
typedef struct ChlMultSpec ChlMultSpec;

/**
 * Opaque prime window `P_H` with coefficients.
 */
typedef struct ChlPrimeWindow ChlPrimeWindow;

/**
 * Opaque `{-1, 0, +1}` window.
 */
typedef struct ChlSignWindow ChlSignWindow;

typedef struct ChlComplex {
  double re;
  double im;
} ChlComplex;

/**
 * Correlation parameters `a n + b`, `a n + b + h`.
 */
typedef struct ChlParams {
  uint64_t a;
  int64_t b;
  int64_t h;
} ChlParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *chl_last_error(void);

/**
 * Parses a selector such as `liouville`, `twist:1.5` or `mobius*legendre:5`.
 *
 * # Safety
 * `selector` must be a NUL-terminated string; `out` must be writable.
 */
enum ChlStatus chl_mult_spec_parse(const char *selector, struct ChlMultSpec **out);

/**
 * # Safety
 * `spec` must be null or come from [`chl_mult_spec_parse`], freed once.
 */
void chl_mult_spec_free(struct ChlMultSpec *spec);

/**
 * `g(n)`.
 *
 * # Safety
 * `spec` must be a live handle; `out` must be writable.
 */
enum ChlStatus chl_mult_spec_eval(const struct ChlMultSpec *spec,
                                  uint64_t n,
                                  struct ChlComplex *out);

/**
 * Sieves `λ` or `μ` on `[lo, hi)`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ChlStatus chl_sign_window_new(enum ChlSignKind kind,
                                   uint64_t lo,
                                   uint64_t hi,
                                   struct ChlSignWindow **out);

/**
 * # Safety
 * `w` must be null or come from [`chl_sign_window_new`], freed once.
 */
void chl_sign_window_free(struct ChlSignWindow *w);

/**
 * Number of values in the window.
 *
 * # Safety
 * `w` must be a live handle; `out` must be writable.
 */
enum ChlStatus chl_sign_window_len(const struct ChlSignWindow *w, uint64_t *out);

/**
 * Copies the window into `buf`, which holds `cap` entries.
 *
 * # Safety
 * `w` must be a live handle; `buf` must hold `cap` writable bytes.
 */
enum ChlStatus chl_sign_window_copy(const struct ChlSignWindow *w, int8_t *buf, uint64_t cap);

/**
 * `P_H` for `g1`, `g2` with coefficients `c_p = conj(g1(p) g2(p))`.
 *
 * # Safety
 * `g1`, `g2` must be live handles; `out` must be writable.
 */
enum ChlStatus chl_prime_window_new(const struct ChlMultSpec *g1,
                                    const struct ChlMultSpec *g2,
                                    double eps,
                                    uint64_t big_h,
                                    struct ChlParams p,
                                    struct ChlPrimeWindow **out);

/**
 * # Safety
 * `pw` must be null or come from [`chl_prime_window_new`], freed once.
 */
void chl_prime_window_free(struct ChlPrimeWindow *pw);

/**
 * Number of primes in the window.
 *
 * # Safety
 * `pw` must be a live handle; `out` must be writable.
 */
enum ChlStatus chl_prime_window_len(const struct ChlPrimeWindow *pw, uint64_t *out);

/**
 * Copies the primes into `buf`, which holds `cap` entries.
 *
 * # Safety
 * `pw` must be a live handle; `buf` must hold `cap` writable entries.
 */
enum ChlStatus chl_prime_window_primes(const struct ChlPrimeWindow *pw,
                                       uint64_t *buf,
                                       uint64_t cap);

/**
 * Raw and normalized `Σ g1(a n + b) g2(a n + b + h) / n` over `(x/ω, x]`.
 *
 * # Safety
 * Handles must be live; `raw` and `normalized` must be writable.
 */
enum ChlStatus chl_correlation2(const struct ChlMultSpec *g1,
                                const struct ChlMultSpec *g2,
                                struct ChlParams p,
                                uint64_t x,
                                double omega,
                                struct ChlComplex *raw,
                                struct ChlComplex *normalized);

/**
 * `Σ_{p ≤ x} (1 - Re g(p) conj(χ(p)) p^{-it}) / p`, with `χ` given as
 * `trivial`, `principal:q` or `legendre:p`.
 *
 * # Safety
 * `g` must be live; `chi` NUL-terminated; `out` writable.
 */
enum ChlStatus chl_pretentious_distance(const struct ChlMultSpec *g,
                                        const char *chi,
                                        double t,
                                        uint64_t x,
                                        double *out);

/**
 * `H(Y_H)` in nats under the window measure on `(x/ω, x]`.
 *
 * # Safety
 * `out` must be writable.
 */
enum ChlStatus chl_yh_entropy(double eps, uint64_t big_h, uint64_t x, double omega, double *out);

/**
 * `I(X_H; Y_H)` in nats.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum ChlStatus chl_mutual_information(const struct ChlMultSpec *g1,
                                      const struct ChlMultSpec *g2,
                                      double eps,
                                      struct ChlParams p,
                                      uint64_t big_h,
                                      uint64_t x,
                                      double omega,
                                      double *out);

/**
 * `S_H(α) = Σ_{p ∈ P_H} (c_p/p) e(αp)`.
 *
 * # Safety
 * `pw` must be live; `out` must be writable.
 */
enum ChlStatus chl_exp_sum(const struct ChlPrimeWindow *pw, double alpha, struct ChlComplex *out);

/**
 * `Σ_{k ∈ Z/aH} |S_H(k/aH)|⁴`.
 *
 * # Safety
 * `pw` must be live; `out` must be writable.
 */
enum ChlStatus chl_fourth_moment(const struct ChlPrimeWindow *pw, uint64_t a, double *out);

/**
 * `|Ξ_H|` at the threshold `ε²/ln H`, using the window's parameters.
 *
 * # Safety
 * `pw` must be live; `out` must be writable.
 */
enum ChlStatus chl_large_value_count(const struct ChlPrimeWindow *pw, uint64_t *out);

/**
 * Mean over windows `(x, x + H]`, `x = X, X + H, … < 2X`, of the grid
 * supremum of `|(1/H) Σ_j g(x + j) e(jα)|`.
 *
 * # Safety
 * `g` must be live; `out` must be writable.
 */
enum ChlStatus chl_maximal_short_exp_sum(const struct ChlMultSpec *g,
                                         uint64_t x,
                                         uint64_t big_h,
                                         uint64_t oversample,
                                         double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CHOWLA_LAB_H */
