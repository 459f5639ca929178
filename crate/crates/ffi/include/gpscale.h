#ifndef GPSCALE_H
#define GPSCALE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum GpsStatus {
  GPS_STATUS_OK = 0,
  /**
   * Reading or writing failed.
   */
  GPS_STATUS_IO = 1,
  /**
   * Bad configuration, parameters or input data.
   */
  GPS_STATUS_CONFIG = 2,
  /**
   * A state or solution cap was hit.
   */
  GPS_STATUS_RESOURCE = 3,
  /**
   * A policy failed or broke the protocol.
   */
  GPS_STATUS_POLICY = 4,
  /**
   * A required pointer argument was null.
   */
  GPS_STATUS_NULL_ARGUMENT = 5,
  /**
   * A string argument was not valid UTF-8.
   */
  GPS_STATUS_INVALID_UTF8 = 6,
  /**
   * A Rust panic was caught at the boundary.
   */
  GPS_STATUS_PANIC = 7,
} GpsStatus;

/**
 * Opaque planning instance.
 */
typedef struct GpsInstance GpsInstance;

/**
 * Opaque policy.
 */
typedef struct GpsPolicy GpsPolicy;

/**
 * Outcome of a single rollout.
 */
typedef struct GpsRunOutcome {
  bool solved;
  size_t steps;
} GpsRunOutcome;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer
 * stays valid until the next call into the library on the same thread.
 */
const char *gps_last_error(void);

/**
 * Library version as a static string.
 */
const char *gps_version(void);

/**
 * Releases a string returned by the library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void gps_string_free(char *s);

/**
 * Number of valid compositions of `domain` at size `n`.
 *
 * # Safety
 * `domain` must be a nul-terminated string and `out` writable.
 */
enum GpsStatus gps_csp_count(const char *domain, uint64_t n, size_t *out);

/**
 * All compositions of `domain` at size `n` as a JSON array of objects
 * mapping each size parameter to its value.
 *
 * # Safety
 * `domain` must be a nul-terminated string and `out` writable. The result
 * must be released with [`gps_string_free`].
 */
enum GpsStatus gps_csp_solve_json(const char *domain, uint64_t n, char **out);

/**
 * Generates an instance of `domain` at size `n`, picking the composition
 * uniformly with `seed`.
 *
 * # Safety
 * `domain` must be a nul-terminated string and `out` writable. The handle
 * must be released with [`gps_instance_free`].
 */
enum GpsStatus gps_instance_generate(const char *domain,
                                     uint64_t n,
                                     uint64_t seed,
                                     struct GpsInstance **out);

/**
 * Parses an instance from its JSON document.
 *
 * # Safety
 * `json` must be a nul-terminated string and `out` writable.
 */
enum GpsStatus gps_instance_from_json(const char *json, struct GpsInstance **out);

/**
 * # Safety
 * `inst` must be null or a live handle from this library.
 */
void gps_instance_free(struct GpsInstance *inst);

/**
 * Size of the instance under its domain's size equation.
 *
 * # Safety
 * `inst` must be a live handle and `out` writable.
 */
enum GpsStatus gps_instance_size(const struct GpsInstance *inst, size_t *out);

/**
 * Instance as JSON.
 *
 * # Safety
 * `inst` must be a live handle and `out` writable.
 */
enum GpsStatus gps_instance_to_json(const struct GpsInstance *inst, char **out);

/**
 * Instance as a PDDL problem named `name`.
 *
 * # Safety
 * `inst` must be a live handle, `name` a nul-terminated string and `out`
 * writable.
 */
enum GpsStatus gps_instance_to_pddl(const struct GpsInstance *inst, const char *name, char **out);

/**
 * Optimal plan length within `horizon` steps, or -1 when there is none.
 *
 * # Safety
 * `inst` must be a live handle and `out` writable.
 */
enum GpsStatus gps_oracle_plan_length(const struct GpsInstance *inst, size_t horizon, int64_t *out);

/**
 * Builds a policy from a short form such as `oracle-greedy` or
 * `stepwise:10`, or from a JSON object.
 *
 * # Safety
 * `spec` must be a nul-terminated string and `out` writable. The handle
 * must be released with [`gps_policy_free`].
 */
enum GpsStatus gps_policy_new(const char *spec, struct GpsPolicy **out);

/**
 * # Safety
 * `policy` must be null or a live handle from this library.
 */
void gps_policy_free(struct GpsPolicy *policy);

/**
 * Rolls `policy` out on `inst` under plan-length `bound`. The random
 * stream is seeded from the instance seed xor `salt`.
 *
 * # Safety
 * `policy` and `inst` must be live handles and `out` writable.
 */
enum GpsStatus gps_run(struct GpsPolicy *policy,
                       const struct GpsInstance *inst,
                       size_t bound,
                       uint64_t salt,
                       struct GpsRunOutcome *out);

/**
 * Scaling evaluation of `policy` on `domain`. `params_json` holds an
 * evaluation parameter object (missing fields take defaults) or is null.
 * The result is the scaling curve as JSON.
 *
 * # Safety
 * `policy` must be a live handle, `domain` a nul-terminated string,
 * `params_json` null or a nul-terminated string, and `out` writable.
 */
enum GpsStatus gps_evaluate_json(struct GpsPolicy *policy,
                                 const char *domain,
                                 const char *params_json,
                                 char **out);

/**
 * `p`-quantile of Student's t with `df` degrees of freedom.
 *
 * # Safety
 * `out` must be writable.
 */
enum GpsStatus gps_t_quantile(double p, uint64_t df, double *out);

/**
 * Scale of a coverage curve given as parallel arrays of length `len`.
 *
 * # Safety
 * `sizes` and `coverage` must point to `len` readable elements and `out`
 * must be writable.
 */
enum GpsStatus gps_scale(const size_t *sizes,
                         const double *coverage,
                         size_t len,
                         double tau,
                         size_t zeta,
                         size_t *out);

/**
 * SumCov of a coverage curve. `up_to_scale` selects the variant that
 * only adds entries up to the Scale size.
 *
 * # Safety
 * As for [`gps_scale`].
 */
enum GpsStatus gps_sumcov(const size_t *sizes,
                          const double *coverage,
                          size_t len,
                          double tau,
                          size_t zeta,
                          bool up_to_scale,
                          double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* GPSCALE_H */
