#ifndef BLACKOUT_RISK_H
#define BLACKOUT_RISK_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum BrStatus {
  BR_STATUS_OK = 0,
  BR_STATUS_NULL_POINTER = 1,
  BR_STATUS_INVALID_UTF8 = 2,
  BR_STATUS_PARSE = 3,
  BR_STATUS_VALIDATION = 4,
  BR_STATUS_DOMAIN = 5,
  BR_STATUS_IO = 6,
  BR_STATUS_INFEASIBLE_DISPATCH = 7,
  BR_STATUS_SINGULAR_SYSTEM = 8,
  BR_STATUS_NOT_MINIMALIZABLE = 9,
  BR_STATUS_NOT_REPAIRABLE = 10,
  BR_STATUS_INSUFFICIENT_DATA = 11,
  BR_STATUS_UNSTABLE = 12,
  BR_STATUS_MISSING_SET_SIZE = 13,
  BR_STATUS_EMPTY_LEDGER = 14,
  BR_STATUS_PANIC = 15,
} BrStatus;

/**
 * Opaque grid case.
 */
typedef struct BrCase BrCase;

/**
 * Opaque campaign ledger.
 */
typedef struct BrLedger BrLedger;

typedef struct BrCascadeOutcome {
  double load_shed_mw;
  double shed_fraction;
  bool is_blackout;
  /**
   * Branches tripped by overload after the initiating outages.
   */
  size_t n_tripped;
  size_t iterations;
  bool converged;
} BrCascadeOutcome;

typedef struct BrJointProbability {
  double value;
  double abs_error;
  bool tolerance_met;
} BrJointProbability;

typedef struct BrSizeBounds {
  uint64_t unique_found;
  double chao_lower;
  double rcp_upper;
  uint64_t n1;
  uint64_t n2;
  int64_t pair_max_a;
  int64_t pair_max_b;
  double q_proportion;
} BrSizeBounds;

typedef struct BrRisk {
  double r2;
  double r3_low;
  double r3_high;
  double total_low;
  double total_high;
} BrRisk;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *br_last_error(void);

/**
 * Forget the last error on this thread.
 */
void br_clear_error(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *br_version(void);

/**
 * Load a case file (native JSON, or MATPOWER text for `.m`).
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum BrStatus br_case_load(const char *path, struct BrCase **out);

/**
 * Parse a case from native JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum BrStatus br_case_from_json(const char *json, struct BrCase **out);

/**
 * # Safety
 * `case` must come from a `br_case_*` constructor (or be NULL) and not be
 * used afterwards.
 */
void br_case_free(struct BrCase *case_);

/**
 * # Safety
 * `case` must be a live handle; `n_buses`/`n_branches` writable or NULL.
 */
enum BrStatus br_case_size(const struct BrCase *case_, size_t *n_buses, size_t *n_branches);

/**
 * Cascade after removing `n` branches (by id).
 *
 * # Safety
 * `ids` must point to `n` readable ids; `out` must be writable.
 */
enum BrStatus br_simulate(const struct BrCase *case_,
                          const int64_t *ids,
                          size_t n,
                          double threshold,
                          struct BrCascadeOutcome *out);

/**
 * Joint outage probability of `n` branches under ρ(d) = ρ₀·exp(−d/L).
 *
 * # Safety
 * `ids` must point to `n` readable ids; `out` must be writable.
 */
enum BrStatus br_joint_probability(const struct BrCase *case_,
                                   const int64_t *ids,
                                   size_t n,
                                   double rho0,
                                   double length_km,
                                   struct BrJointProbability *out);

/**
 * Run a Random Chemistry campaign. `scheme` is a comma list or "auto";
 * `workers` 0 means the default thread count.
 *
 * # Safety
 * `scheme` must be a NUL-terminated string; `out` must be writable.
 */
enum BrStatus br_campaign_run(const struct BrCase *case_,
                              const char *scheme,
                              uint64_t n_trials,
                              uint64_t seed,
                              size_t workers,
                              struct BrLedger **out);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum BrStatus br_ledger_load(const char *path, struct BrLedger **out);

/**
 * Write the ledger (JSON lines) and its `.meta.json` sidecar.
 *
 * # Safety
 * `ledger` must be a live handle; `path` a NUL-terminated string.
 */
enum BrStatus br_ledger_save(const struct BrLedger *ledger, const char *path);

/**
 * # Safety
 * `ledger` must come from a `br_ledger_*`/`br_campaign_run` call (or be
 * NULL) and not be used afterwards.
 */
void br_ledger_free(struct BrLedger *ledger);

/**
 * Trials run and aborted.
 *
 * # Safety
 * `ledger` must be a live handle; outputs writable or NULL.
 */
enum BrStatus br_ledger_trials(const struct BrLedger *ledger, uint64_t *run, uint64_t *aborted);

/**
 * Number of unique order-`k` sets in the ledger.
 *
 * # Safety
 * `ledger` must be a live handle; `out` must be writable.
 */
enum BrStatus br_ledger_unique_count(const struct BrLedger *ledger, size_t k, size_t *out);

/**
 * # Safety
 * `ledger` must be a live handle; `out` must be writable.
 */
enum BrStatus br_chao_estimate(const struct BrLedger *ledger, size_t k, double *out);

/**
 * Chao and RCP bounds on the number of N-3 malignancies.
 *
 * # Safety
 * `case`, `ledger` must be live handles; `out` must be writable.
 */
enum BrStatus br_size_bounds(const struct BrCase *case_,
                             const struct BrLedger *ledger,
                             double window_fraction,
                             uint64_t min_window,
                             struct BrSizeBounds *out);

/**
 * System risk at one (ρ₀, L). Set sizes: a negative `k2_size` or `k3_low`
 * means "the sampled sets are complete"; `k3_low < k3_high` gives bounds.
 *
 * # Safety
 * `case`, `ledger` must be live handles; `out` must be writable.
 */
enum BrStatus br_risk(const struct BrCase *case_,
                      const struct BrLedger *ledger,
                      double rho0,
                      double length_km,
                      double k2_size,
                      double k3_low,
                      double k3_high,
                      struct BrRisk *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLACKOUT_RISK_H */
