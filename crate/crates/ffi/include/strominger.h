/* C interface to the strominger lattice/solver pipeline. */

#ifndef STROMINGER_H
#define STROMINGER_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes returned by every fallible function.
 */
enum StromingerStatus
#ifdef __cplusplus
  : int32_t
#endif // __cplusplus
 {
  /**
   * Success.
   */
  StromingerStatus_Ok = 0,
  /**
   * Invalid configuration or usage.
   */
  StromingerStatus_ConfigError = 1,
  /**
   * Residual or feasibility failure (solver divergence, verification
   * failure, integrability violation).
   */
  StromingerStatus_FeasibilityError = 2,
  /**
   * Null pointer or malformed string argument.
   */
  StromingerStatus_InvalidArgument = 3,
  /**
   * Internal panic caught at the boundary.
   */
  StromingerStatus_InternalError = 4,
};
#ifndef __cplusplus
typedef int32_t StromingerStatus;
#endif // __cplusplus

/**
 * A completed continuation solve (opaque).
 */
typedef struct StromingerSolution StromingerSolution;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static string; do not free.
 */
const char *strominger_version(void);

/**
 * Release a string returned through an out-parameter.
 */
void strominger_string_free(char *s);

/**
 * Run the exact lattice arithmetic of the `lattice` config section.
 * On success `*out_json` holds the report; on failure, the error message.
 */
int32_t strominger_lattice_report(const char *config_json, char **out_json);

/**
 * Synthesize geometry data and report the integrability budget without
 * writing files. On success `*out_json` holds the synthesis summary.
 */
int32_t strominger_synthesis_report(const char *config_json, char **out_json);

/**
 * Run the continuation solve described by the config. On success the
 * solution is returned through `out_solution` as an opaque handle.
 */
int32_t strominger_solve(const char *config_json,
                         struct StromingerSolution **out_solution,
                         char **out_error);

/**
 * Summarize a completed solve as JSON (final t, residual, iteration trace).
 */
int32_t strominger_solution_summary(const struct StromingerSolution *solution, char **out_json);

/**
 * Evaluate the full residual set at the solved u. Returns Ok and the
 * report JSON when all residuals pass, FeasibilityError (report still
 * written) when any fails.
 */
int32_t strominger_verify(const struct StromingerSolution *solution, char **out_json);

/**
 * Release a solution handle.
 */
void strominger_solution_free(struct StromingerSolution *solution);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* STROMINGER_H */
