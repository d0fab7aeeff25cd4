#ifndef RWM_H
#define RWM_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RwmStatus {
  RWM_STATUS_OK = 0,
  RWM_STATUS_INVALID_ARGUMENT = 1,
  RWM_STATUS_NULL_POINTER = 2,
  RWM_STATUS_TRUNCATED = 3,
  RWM_STATUS_SAMPLE_TOO_SMALL = 4,
  RWM_STATUS_BUFFER_TOO_SMALL = 5,
  RWM_STATUS_INTERNAL = 6,
} RwmStatus;

typedef enum RwmLastReturnVariant {
  RWM_LAST_RETURN_VARIANT_EXCURSION_DERIVED = 0,
  RWM_LAST_RETURN_VARIANT_PAPER_DISPLAY = 1,
} RwmLastReturnVariant;

/**
 * Opaque generator handle (xoshiro256++).
 */
typedef struct RwmRng RwmRng;

/**
 * Opaque walk path handle.
 */
typedef struct RwmTrajectory RwmTrajectory;

/**
 * Return structure of one run to the last visit of 0.
 */
typedef struct RwmReturnSummary {
  uint32_t returns_count;
  uint64_t last_return;
  double truncation_bias_bound;
  uint64_t steps;
} RwmReturnSummary;

/**
 * Distribution function callback for `rwm_ks_one_sample`.
 */
typedef double (*RwmCdf)(double x, void *user_data);

/**
 * Kolmogorov-Smirnov outcome.
 */
typedef struct RwmKsResult {
  double statistic;
  double n_effective;
  double p_value;
} RwmKsResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failing call on this thread; empty if none.
 * Valid until the next failing call on the same thread.
 */
const char *rwm_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rwm_version(void);

uint64_t rwm_derive_seed(uint64_t master, uint64_t index);

/**
 * New generator seeded through SplitMix64. Free with `rwm_rng_free`.
 */
struct RwmRng *rwm_rng_new(uint64_t seed);

void rwm_rng_free(struct RwmRng *rng);

enum RwmStatus rwm_rng_next_u64(struct RwmRng *rng, uint64_t *value);

/**
 * Uniform on `[0, 1)` with 53 random bits.
 */
enum RwmStatus rwm_rng_uniform(struct RwmRng *rng, double *value);

/**
 * Standard normal by inversion of one uniform.
 */
enum RwmStatus rwm_rng_standard_normal(struct RwmRng *rng, double *value);

enum RwmStatus rwm_transition_probabilities(uint32_t visits,
                                            double delta,
                                            uint32_t visit_cap,
                                            double *p,
                                            double *q);

/**
 * Simulates `steps` steps from 0. Free the result with `rwm_trajectory_free`.
 */
enum RwmStatus rwm_simulate_path(double delta,
                                 uint32_t visit_cap,
                                 size_t steps,
                                 struct RwmRng *rng,
                                 struct RwmTrajectory **trajectory);

/**
 * Builds a path from positions with unit steps.
 */
enum RwmStatus rwm_trajectory_from_positions(const int32_t *positions,
                                             size_t len,
                                             struct RwmTrajectory **trajectory);

void rwm_trajectory_free(struct RwmTrajectory *trajectory);

/**
 * Number of positions (steps + 1); 0 for a null handle.
 */
size_t rwm_trajectory_len(const struct RwmTrajectory *trajectory);

/**
 * Copies the positions into `buffer`, which must hold `rwm_trajectory_len` values.
 */
enum RwmStatus rwm_trajectory_positions(const struct RwmTrajectory *trajectory,
                                        int32_t *buffer,
                                        size_t capacity);

/**
 * Copies the running visit counts into `buffer`.
 */
enum RwmStatus rwm_trajectory_visits(const struct RwmTrajectory *trajectory,
                                     uint32_t *buffer,
                                     size_t capacity);

/**
 * Likelihood ratio of the modified walk against the symmetric walk on `trajectory`.
 */
enum RwmStatus rwm_discrete_density(const struct RwmTrajectory *trajectory,
                                    double delta,
                                    uint32_t visit_cap,
                                    double *value);

/**
 * Runs from 0 until the walk stands `barrier` above 0 with `p > 1/2`.
 * Returns `RWM_STATUS_TRUNCATED` if `horizon_cap` steps pass first; the
 * summary then holds the partial statistics with bias bound 1.
 */
enum RwmStatus rwm_simulate_to_last_return(double delta,
                                           uint32_t barrier,
                                           uint64_t horizon_cap,
                                           struct RwmRng *rng,
                                           struct RwmReturnSummary *summary);

/**
 * `P(R >= k)` for the returns count `R`.
 */
enum RwmStatus rwm_returns_survival(uint64_t k, double delta, double *value);

double rwm_rayleigh_cdf(double x);

enum RwmStatus rwm_slope_limit_cdf(double x, double c, double *value);

enum RwmStatus rwm_return_time_transform(double s, double p, double *value);

/**
 * `E[tau; tau < inf]`. Sets `*finite` to false (and `*value` to +inf) at `p = 1/2`.
 */
enum RwmStatus rwm_expected_return_time(double p, double *value, bool *finite);

enum RwmStatus rwm_expected_last_return(double delta,
                                        enum RwmLastReturnVariant variant,
                                        double *value);

enum RwmStatus rwm_ks_pvalue(double d, double n_effective, double *value);

enum RwmStatus rwm_ks_one_sample(const double *samples,
                                 size_t len,
                                 RwmCdf cdf,
                                 void *user_data,
                                 struct RwmKsResult *result);

enum RwmStatus rwm_ks_two_sample(const double *a,
                                 size_t a_len,
                                 const double *b,
                                 size_t b_len,
                                 struct RwmKsResult *result);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RWM_H */
