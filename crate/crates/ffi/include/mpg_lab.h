#ifndef MPG_LAB_H
#define MPG_LAB_H

/* Generated by cbindgen from the mpg-lab-ffi sources; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result code of every fallible call.
 */
typedef enum MpgStatus {
  MPG_STATUS_OK = 0,
  MPG_STATUS_NULL_POINTER = 1,
  MPG_STATUS_INVALID_UTF8 = 2,
  MPG_STATUS_INVALID_ARGUMENT = 3,
  MPG_STATUS_MISSING_POTENTIAL = 4,
  MPG_STATUS_NUMERICAL = 5,
  MPG_STATUS_TOO_LARGE = 6,
  MPG_STATUS_PANIC = 7,
} MpgStatus;

typedef enum MpgAlgorithm {
  MPG_ALGORITHM_PG = 0,
  MPG_ALGORITHM_PG_LOGBARRIER = 1,
  MPG_ALGORITHM_NPG = 2,
  MPG_ALGORITHM_NPG_BR = 3,
  MPG_ALGORITHM_MAX_GAIN_BR = 4,
  MPG_ALGORITHM_NN_PG = 5,
  MPG_ALGORITHM_NN_ADAM = 6,
} MpgAlgorithm;

/**
 * Opaque game handle.
 */
typedef struct MpgGame MpgGame;

/**
 * Opaque policy-parameter handle (tabular logits or MLP weights).
 */
typedef struct MpgParams MpgParams;

/**
 * Settings of [`mpg_run`]; start from [`mpg_run_options_default`].
 */
typedef struct MpgRunOptions {
  enum MpgAlgorithm algorithm;
  double eta;
  double lambda;
  size_t k;
  uint64_t iters;
  uint64_t seed;
  double epsilon;
} MpgRunOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer stays
 * valid until the next call into this library on the same thread.
 */
const char *mpg_last_error_message(void);

/**
 * Parses a game from its JSON description.
 *
 * # Safety
 * `json` must be NULL or a NUL-terminated string; `out` must be NULL or writable.
 */
enum MpgStatus mpg_game_from_json(const char *json, struct MpgGame **out);

/**
 * Builds the Coordination Game with `num_agents` agents.
 *
 * # Safety
 * `out` must be NULL or writable.
 */
enum MpgStatus mpg_game_coordination(size_t num_agents,
                                     double eps_trans,
                                     double gamma,
                                     struct MpgGame **out);

/**
 * # Safety
 * `game` must be NULL or a handle from this library that was not freed yet.
 */
void mpg_game_free(struct MpgGame *game);

/**
 * # Safety
 * `game` must be a live handle; `out` must be writable.
 */
enum MpgStatus mpg_game_num_agents(const struct MpgGame *game, size_t *out);

/**
 * # Safety
 * `game` must be a live handle; `out` must be writable.
 */
enum MpgStatus mpg_game_num_states(const struct MpgGame *game, size_t *out);

/**
 * Seeded standard-normal softmax logits for `game`.
 *
 * # Safety
 * `game` must be a live handle; `out` must be writable.
 */
enum MpgStatus mpg_params_init(const struct MpgGame *game, uint64_t seed, struct MpgParams **out);

/**
 * # Safety
 * `params` must be NULL or a handle from this library that was not freed yet.
 */
void mpg_params_free(struct MpgParams *params);

/**
 * Writes `pi^agent(.|state)` into `probs`, which must hold `len` doubles with
 * `len` equal to the agent's action count.
 *
 * # Safety
 * Handles must be live; `probs` must point to `len` writable doubles.
 */
enum MpgStatus mpg_params_policy_row(const struct MpgGame *game,
                                     const struct MpgParams *params,
                                     size_t agent,
                                     size_t state,
                                     double *probs,
                                     size_t len);

/**
 * Potential value `Phi(mu)` of the policy.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum MpgStatus mpg_phi_mu(const struct MpgGame *game, const struct MpgParams *params, double *out);

/**
 * Largest unilateral improvement over agents.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum MpgStatus mpg_nash_gap(const struct MpgGame *game,
                            const struct MpgParams *params,
                            double *out);

/**
 * Welfare of the policy divided by the optimal product-policy welfare.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum MpgStatus mpg_poa(const struct MpgGame *game, const struct MpgParams *params, double *out);

struct MpgRunOptions mpg_run_options_default(void);

/**
 * Runs a dynamic from its seeded initial parameters. The final parameters
 * are stored in `out_params` and the final Nash-gap in `out_nash_gap`; either
 * may be NULL when not needed.
 *
 * # Safety
 * `game` must be a live handle, `options` must point to valid options, and
 * the outputs must be NULL or writable.
 */
enum MpgStatus mpg_run(const struct MpgGame *game,
                       const struct MpgRunOptions *options,
                       struct MpgParams **out_params,
                       double *out_nash_gap);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MPG_LAB_H */
