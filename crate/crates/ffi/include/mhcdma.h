#ifndef MHCDMA_H
#define MHCDMA_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum MhStatus {
  MH_STATUS_OK = 0,
  MH_STATUS_NULL_POINTER = 1,
  MH_STATUS_INVALID_ARGUMENT = 2,
  MH_STATUS_INFEASIBLE = 3,
  MH_STATUS_NOT_ACHIEVABLE = 4,
  MH_STATUS_INAPPLICABLE = 5,
  MH_STATUS_NUMERICAL = 6,
  MH_STATUS_PARSE = 7,
  MH_STATUS_IO = 8,
  MH_STATUS_BUFFER_TOO_SMALL = 9,
  MH_STATUS_PANIC = 10,
} MhStatus;

typedef enum MhReceiver {
  MH_RECEIVER_MATCHED_FILTER = 0,
  MH_RECEIVER_DECORRELATOR = 1,
  MH_RECEIVER_MMSE = 2,
} MhReceiver;

/**
 * Opaque per-node powers, SINRs and utilities from a solver.
 */
typedef struct MhOutcome MhOutcome;

/**
 * Opaque scenario handle: topology, gains and spreading sequences.
 */
typedef struct MhScenario MhScenario;

/**
 * Game parameters. Start from [`mh_game_params_default`].
 */
typedef struct MhGameParams {
  /**
   * Information bits per packet.
   */
  uint32_t info_bits;
  /**
   * Total bits per packet.
   */
  uint32_t packet_bits;
  /**
   * Bits per second.
   */
  double rate;
  /**
   * Watts.
   */
  double max_power;
} MhGameParams;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or null. Valid until the
 * next call into this library from the same thread.
 */
const char *mh_last_error(void);

struct MhGameParams mh_game_params_default(void);

/**
 * Generates a scenario with the default geometry; the same inputs give the
 * same scenario as the command-line tool.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum MhStatus mh_scenario_generate(size_t nodes,
                                   size_t processing_gain,
                                   uint64_t seed,
                                   struct MhScenario **out);

/**
 * # Safety
 * `json` must be a NUL-terminated string and `out` writable.
 */
enum MhStatus mh_scenario_from_json(const char *json, struct MhScenario **out);

/**
 * Serializes a scenario. Release the string with [`mh_string_free`].
 *
 * # Safety
 * `sc` must come from this library and `out` must be writable.
 */
enum MhStatus mh_scenario_to_json(const struct MhScenario *sc, char **out);

/**
 * # Safety
 * `s` must be null or a string returned by this library, freed once.
 */
void mh_string_free(char *s);

/**
 * Number of transmitting nodes, or 0 for a null handle.
 *
 * # Safety
 * `sc` must be null or a live handle.
 */
size_t mh_scenario_node_count(const struct MhScenario *sc);

/**
 * # Safety
 * `sc` must be null or a live handle.
 */
size_t mh_scenario_processing_gain(const struct MhScenario *sc);

/**
 * # Safety
 * `sc` must be null or a handle from this library, freed once.
 */
void mh_scenario_free(struct MhScenario *sc);

/**
 * SINR maximizing bits per joule for `packet_bits`-bit packets.
 *
 * # Safety
 * `out` must be writable.
 */
enum MhStatus mh_target_sinr(uint32_t packet_bits, double *out);

/**
 * Noncooperative equilibrium. A null `params` selects the defaults.
 *
 * # Safety
 * `sc` must be a live handle, `params` null or valid, `out` writable.
 */
enum MhStatus mh_nash_solve(const struct MhScenario *sc,
                            enum MhReceiver receiver,
                            const struct MhGameParams *params,
                            struct MhOutcome **out);

/**
 * Equal-weight social optimum with powers clipped at the cap. Returns
 * [`MhStatus::Infeasible`] when no balanced SINR is feasible.
 *
 * # Safety
 * `sc` must be a live handle, `params` null or valid, `out` writable.
 */
enum MhStatus mh_social_optimum(const struct MhScenario *sc,
                                enum MhReceiver receiver,
                                const struct MhGameParams *params,
                                struct MhOutcome **out);

/**
 * Number of nodes in the outcome, or 0 for a null handle.
 *
 * # Safety
 * `o` must be null or a live handle.
 */
size_t mh_outcome_len(const struct MhOutcome *o);

/**
 * NaN for a null handle.
 *
 * # Safety
 * `o` must be null or a live handle.
 */
double mh_outcome_target_sinr(const struct MhOutcome *o);

/**
 * Mean utility in bits per joule; NaN for a null handle.
 *
 * # Safety
 * `o` must be null or a live handle.
 */
double mh_outcome_mean_utility(const struct MhOutcome *o);

/**
 * # Safety
 * `o` must be null or a live handle.
 */
bool mh_outcome_converged(const struct MhOutcome *o);

/**
 * Nodes whose power hit the cap.
 *
 * # Safety
 * `o` must be null or a live handle.
 */
size_t mh_outcome_capped_count(const struct MhOutcome *o);

/**
 * Copies per-node powers (watts) into `buf`, which must hold
 * [`mh_outcome_len`] values.
 *
 * # Safety
 * `buf` must be valid for `len` writes.
 */
enum MhStatus mh_outcome_copy_powers(const struct MhOutcome *o, double *buf, size_t len);

/**
 * # Safety
 * `buf` must be valid for `len` writes.
 */
enum MhStatus mh_outcome_copy_sinrs(const struct MhOutcome *o, double *buf, size_t len);

/**
 * # Safety
 * `buf` must be valid for `len` writes.
 */
enum MhStatus mh_outcome_copy_utilities(const struct MhOutcome *o, double *buf, size_t len);

/**
 * # Safety
 * `o` must be null or a handle from this library, freed once.
 */
void mh_outcome_free(struct MhOutcome *o);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* MHCDMA_H */
