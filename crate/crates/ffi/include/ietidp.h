/* Generated by cbindgen from the ietidp-ffi crate. */

#ifndef IETIDP_H
#define IETIDP_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum IetiStatus {
  IETI_STATUS_OK = 0,
  IETI_STATUS_NULL_POINTER = 1,
  /**
   * Malformed input: unknown builtin, bad JSON, invalid option values.
   */
  IETI_STATUS_INVALID_INPUT = 2,
  /**
   * Factorization or iteration failure.
   */
  IETI_STATUS_NUMERICAL = 3,
  /**
   * The requested value does not exist (e.g. κ̂ of an unconverged solve).
   */
  IETI_STATUS_NOT_AVAILABLE = 4,
  IETI_STATUS_BUFFER_TOO_SMALL = 5,
  IETI_STATUS_PANIC = 6,
} IetiStatus;

/**
 * A discretized multi-patch domain.
 */
typedef struct IetiDomain IetiDomain;

/**
 * Result of one solve.
 */
typedef struct IetiReport IetiReport;

typedef struct IetiSolveOptions {
  /**
   * Penalty parameter.
   */
  double delta;
  /**
   * Relative residual reduction of PCG.
   */
  double tol;
  size_t max_iter;
  /**
   * Constant right-hand side.
   */
  double source;
  bool check_oracle;
  bool keep_solution;
} IetiSolveOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failure on this thread, or null. The pointer stays
 * valid until the next failing call on the same thread.
 */
const char *ieti_last_error(void);

struct IetiSolveOptions ieti_solve_options_default(void);

/**
 * Builds a builtin domain. `name` is `grid:N`, `tdomain`, `slider:M:S` or
 * `twopatch`.
 *
 * # Safety
 * `name` must be a nul-terminated string and `out` a valid pointer.
 */
enum IetiStatus ieti_domain_from_builtin(const char *name,
                                         size_t degree,
                                         size_t refinement,
                                         struct IetiDomain **out);

/**
 * Builds a domain from a JSON description.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` a valid pointer.
 */
enum IetiStatus ieti_domain_from_json(const char *json,
                                      size_t degree,
                                      size_t refinement,
                                      struct IetiDomain **out);

/**
 * # Safety
 * `domain` must come from this library and not be used afterwards.
 */
void ieti_domain_free(struct IetiDomain *domain);

/**
 * # Safety
 * `domain` must be a valid handle and `out` a valid pointer.
 */
enum IetiStatus ieti_domain_num_patches(const struct IetiDomain *domain, size_t *out);

/**
 * # Safety
 * `domain` must be a valid handle and `out` a valid pointer.
 */
enum IetiStatus ieti_domain_num_dofs(const struct IetiDomain *domain, size_t *out);

/**
 * Replaces the patch coefficients; `len` must equal the number of patches.
 *
 * # Safety
 * `domain` must be a valid handle and `alphas` point to `len` doubles.
 */
enum IetiStatus ieti_domain_set_alphas(struct IetiDomain *domain, const double *alphas, size_t len);

/**
 * Solves with the IETI-DP method. `options` may be null for defaults.
 *
 * # Safety
 * `domain` must be a valid handle, `options` null or valid, `out` valid.
 */
enum IetiStatus ieti_solve(const struct IetiDomain *domain,
                           const struct IetiSolveOptions *options,
                           struct IetiReport **out);

/**
 * # Safety
 * `report` must come from this library and not be used afterwards.
 */
void ieti_report_free(struct IetiReport *report);

/**
 * # Safety
 * `report` must be a valid handle.
 */
size_t ieti_report_iterations(const struct IetiReport *report);

/**
 * # Safety
 * `report` must be a valid handle.
 */
bool ieti_report_converged(const struct IetiReport *report);

/**
 * # Safety
 * `report` must be a valid handle.
 */
size_t ieti_report_multipliers(const struct IetiReport *report);

/**
 * Lanczos condition estimate; `NotAvailable` if PCG did not converge.
 *
 * # Safety
 * `report` must be a valid handle and `out` a valid pointer.
 */
enum IetiStatus ieti_report_kappa(const struct IetiReport *report, double *out);

/**
 * Relative ∞-norm difference to the direct solve; `NotAvailable` unless
 * the solve ran with `check_oracle`.
 *
 * # Safety
 * `report` must be a valid handle and `out` a valid pointer.
 */
enum IetiStatus ieti_report_oracle_error(const struct IetiReport *report, double *out);

/**
 * Copies the patch coefficients into `buf`. With `buf` null only the
 * length is written to `len_out`.
 *
 * # Safety
 * `report` must be a valid handle, `buf` null or valid for `capacity`
 * doubles, `len_out` valid.
 */
enum IetiStatus ieti_report_solution(const struct IetiReport *report,
                                     double *buf,
                                     size_t capacity,
                                     size_t *len_out);

/**
 * The full report as JSON. Release with [`ieti_string_free`].
 *
 * # Safety
 * `report` must be a valid handle and `out` a valid pointer.
 */
enum IetiStatus ieti_report_to_json(const struct IetiReport *report, char **out);

/**
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void ieti_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IETIDP_H */
