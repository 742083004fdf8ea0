#ifndef QLNC_H
#define QLNC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum QlncLinkKind {
  QLNC_LINK_KIND_CLASSICAL = 0,
  QLNC_LINK_KIND_QUANTUM = 1,
} QlncLinkKind;

typedef enum QlncMode {
  QLNC_MODE_COMBINED = 0,
  QLNC_MODE_QLNC_ONLY = 1,
  QLNC_MODE_SUPERDENSE_ONLY = 2,
  QLNC_MODE_FIG1_LOOP = 3,
} QlncMode;

typedef enum QlncStatus {
  QLNC_STATUS_OK = 0,
  QLNC_STATUS_NULL_POINTER = 1,
  QLNC_STATUS_INVALID_ARGUMENT = 2,
  QLNC_STATUS_PARSE = 3,
  QLNC_STATUS_INVARIANT_VIOLATION = 4,
  QLNC_STATUS_PANIC = 5,
} QlncStatus;

/**
 * A mixed classical/quantum network.
 */
typedef struct QlncNetwork QlncNetwork;

/**
 * A throughput report from one run.
 */
typedef struct QlncReport QlncReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *qlnc_last_error(void);

/**
 * Releases a string returned by this library. NULL is ignored.
 *
 * # Safety
 * `s` must come from this library and not have been freed.
 */
void qlnc_string_free(char *s);

/**
 * Builds the separation network on `k >= 2` pairs.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum QlncStatus qlnc_network_prop1(uintptr_t k, struct QlncNetwork **out);

/**
 * Builds the two-node loop.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum QlncStatus qlnc_network_two_node_loop(struct QlncNetwork **out);

/**
 * Builds the butterfly.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum QlncStatus qlnc_network_butterfly(struct QlncNetwork **out);

/**
 * Parses a network description.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum QlncStatus qlnc_network_from_json(const char *json, struct QlncNetwork **out);

/**
 * Serializes a network; free the result with [`qlnc_string_free`].
 *
 * # Safety
 * `net` must be a live handle; `out` must be valid for writes.
 */
enum QlncStatus qlnc_network_to_json(const struct QlncNetwork *net, char **out);

/**
 * Number of validation problems (0 means valid).
 *
 * # Safety
 * `net` must be a live handle; `out` must be valid for writes.
 */
enum QlncStatus qlnc_network_violations(const struct QlncNetwork *net, uintptr_t *out);

/**
 * Number of links of `kind`.
 *
 * # Safety
 * `net` must be a live handle; `out` must be valid for writes.
 */
enum QlncStatus qlnc_network_link_count(const struct QlncNetwork *net,
                                        enum QlncLinkKind kind,
                                        uintptr_t *out);

/**
 * Capacity of `kind` links leaving the set of all transmitters, as
 * `numer / denom`.
 *
 * # Safety
 * `net` must be a live handle; `numer` and `denom` must be valid for writes.
 */
enum QlncStatus qlnc_network_transmitter_cut(const struct QlncNetwork *net,
                                             enum QlncLinkKind kind,
                                             uint64_t *numer,
                                             uint64_t *denom);

/**
 * Runs the heuristic decomposition. Writes the achieved rate and, if
 * `json` is not NULL, the decomposition file text.
 *
 * # Safety
 * `net` must be a live handle; `numer`/`denom` valid for writes; `json`
 * NULL or valid for writes.
 */
enum QlncStatus qlnc_network_decompose(const struct QlncNetwork *net,
                                       uint64_t *numer,
                                       uint64_t *denom,
                                       char **json);

/**
 * Releases a network. NULL is ignored.
 *
 * # Safety
 * `net` must come from this library and not have been freed.
 */
void qlnc_network_free(struct QlncNetwork *net);

/**
 * Runs one throughput scenario. `k` is ignored for the two-node loop;
 * `latency` must be 3 or 4 and only affects the combined mode.
 *
 * # Safety
 * `out` must be valid for writes.
 */
enum QlncStatus qlnc_run(enum QlncMode mode,
                         uintptr_t k,
                         uint64_t n_b,
                         uint64_t seed,
                         uint32_t latency,
                         bool oracle,
                         struct QlncReport **out);

/**
 * Parses a report previously written with [`qlnc_report_to_json`].
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum QlncStatus qlnc_report_from_json(const char *json, struct QlncReport **out);

/**
 * Elapsed time steps of the run.
 *
 * # Safety
 * `r` must be a live handle; `out` must be valid for writes.
 */
enum QlncStatus qlnc_report_elapsed(const struct QlncReport *r, uint64_t *out);

/**
 * Average per-pair bit rate as `numer / denom`.
 *
 * # Safety
 * `r` must be a live handle; `numer` and `denom` must be valid for writes.
 */
enum QlncStatus qlnc_report_avg_rate(const struct QlncReport *r, uint64_t *numer, uint64_t *denom);

/**
 * Serializes a report; free the result with [`qlnc_string_free`].
 *
 * # Safety
 * `r` must be a live handle; `out` must be valid for writes.
 */
enum QlncStatus qlnc_report_to_json(const struct QlncReport *r, char **out);

/**
 * Human-readable report; free the result with [`qlnc_string_free`].
 *
 * # Safety
 * `r` must be a live handle; `out` must be valid for writes.
 */
enum QlncStatus qlnc_report_to_table(const struct QlncReport *r, char **out);

/**
 * Releases a report. NULL is ignored.
 *
 * # Safety
 * `r` must come from this library and not have been freed.
 */
void qlnc_report_free(struct QlncReport *r);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* QLNC_H */
