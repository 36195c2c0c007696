#ifndef COCYCLE_H
#define COCYCLE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Lattice engine selector.
 */
typedef enum CocycleEngine {
  COCYCLE_ENGINE_EUCLID_CHAIN = 0,
  COCYCLE_ENGINE_DYADIC = 1,
} CocycleEngine;

/**
 * Result code of every fallible call.
 */
typedef enum CocycleStatus {
  COCYCLE_STATUS_OK = 0,
  COCYCLE_STATUS_NULL_POINTER = 1,
  COCYCLE_STATUS_INVALID_UTF8 = 2,
  COCYCLE_STATUS_SYNTAX = 3,
  COCYCLE_STATUS_ARGUMENT = 4,
  COCYCLE_STATUS_DOMAIN = 5,
  COCYCLE_STATUS_EVAL = 6,
  COCYCLE_STATUS_CONVERGENCE = 7,
  COCYCLE_STATUS_ACCURACY = 8,
  COCYCLE_STATUS_PANIC = 9,
} CocycleStatus;

/**
 * A parsed or builtin function, univariate or bivariate.
 */
typedef struct CocycleFunction CocycleFunction;

/**
 * Memoizing reconstructor bound to one bivariate function.
 */
typedef struct CocycleReconstructor CocycleReconstructor;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Parses an expression in `nvars` (1 or 2) variables.
 *
 * # Safety
 * `expr` and each of the `nvars` entries of `vars` must be nul-terminated
 * strings; `out` must be writable.
 */
enum CocycleStatus cocycle_function_parse(const char *expr,
                                          const char *const *vars,
                                          size_t nvars,
                                          struct CocycleFunction **out);

/**
 * A builtin univariate seed by name: square, cube, expo, sine, hoelder.
 *
 * # Safety
 * `name` must be a nul-terminated string; `out` must be writable.
 */
enum CocycleStatus cocycle_function_builtin(const char *name, struct CocycleFunction **out);

/**
 * The bivariate `g(x + y) - g(x) - g(y)` of a univariate `g`. Does not
 * consume `g`.
 *
 * # Safety
 * `g` must be a live handle; `out` must be writable.
 */
enum CocycleStatus cocycle_function_from_seed(const struct CocycleFunction *g,
                                              struct CocycleFunction **out);

/**
 * 1 or 2; 0 for a null handle.
 *
 * # Safety
 * `f` must be null or a live handle.
 */
size_t cocycle_function_arity(const struct CocycleFunction *f);

/**
 * Evaluates a bivariate function at `(x, y)`.
 *
 * # Safety
 * `f` must be a live handle; `out` must be writable.
 */
enum CocycleStatus cocycle_function_eval2(const struct CocycleFunction *f,
                                          double x,
                                          double y,
                                          double *out);

/**
 * Evaluates a univariate function at `t`.
 *
 * # Safety
 * `f` must be a live handle; `out` must be writable.
 */
enum CocycleStatus cocycle_function_eval1(const struct CocycleFunction *f, double t, double *out);

/**
 * # Safety
 * `f` must be null or a handle not yet freed.
 */
void cocycle_function_free(struct CocycleFunction *f);

/**
 * Creates a reconstructor for a bivariate function. Copies `f`.
 *
 * # Safety
 * `f` must be a live handle; `out` must be writable.
 */
enum CocycleStatus cocycle_reconstructor_new(const struct CocycleFunction *f,
                                             struct CocycleReconstructor **out);

/**
 * Normalized `h(num/den)` with `h(0) = h(1) = 0`.
 *
 * # Safety
 * `rec` must be a live handle; `out` must be writable.
 */
enum CocycleStatus cocycle_reconstructor_h(const struct CocycleReconstructor *rec,
                                           int64_t num,
                                           int64_t den,
                                           enum CocycleEngine engine,
                                           double *out);

/**
 * `f(num/den) = h(num/den) - F(0, 0)`.
 *
 * # Safety
 * `rec` must be a live handle; `out` must be writable.
 */
enum CocycleStatus cocycle_reconstructor_f_rational(const struct CocycleReconstructor *rec,
                                                    int64_t num,
                                                    int64_t den,
                                                    enum CocycleEngine engine,
                                                    double *out);

/**
 * `f(t)` at a real point to accuracy `epsilon`, via rational approximants.
 *
 * # Safety
 * `rec` must be a live handle; `out` must be writable.
 */
enum CocycleStatus cocycle_reconstructor_f_real(const struct CocycleReconstructor *rec,
                                                double t,
                                                double epsilon,
                                                enum CocycleEngine engine,
                                                double *out);

/**
 * # Safety
 * `rec` must be null or a handle not yet freed.
 */
void cocycle_reconstructor_free(struct CocycleReconstructor *rec);

/**
 * Max Kurepa defect of a bivariate function over `count` triples stored
 * as `x0, y0, z0, x1, y1, z1, ...`.
 *
 * # Safety
 * `f` must be a live handle; `triples` must hold `3 * count` doubles;
 * `out` must be writable.
 */
enum CocycleStatus cocycle_kurepa_residual(const struct CocycleFunction *f,
                                           const double *triples,
                                           size_t count,
                                           double *out);

/**
 * Differentiable-route `f(t)` with `f'(0) = 0`, quadrature tolerance `tol`.
 *
 * # Safety
 * `f` must be a live handle; `out` must be writable.
 */
enum CocycleStatus cocycle_ck_point(const struct CocycleFunction *f,
                                    double t,
                                    double tol,
                                    double *out);

/**
 * Message of the last failing call on this thread, or null. Valid until
 * the next failing call on this thread.
 */
const char *cocycle_last_error_message(void);

/**
 * Static description of a status code.
 */
const char *cocycle_status_string(enum CocycleStatus status);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COCYCLE_H */
