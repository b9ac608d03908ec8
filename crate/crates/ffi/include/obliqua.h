#ifndef OBLIQUA_H
#define OBLIQUA_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ob_check_status {
  OB_CHECK_STATUS_PASS = 0,
  OB_CHECK_STATUS_FAIL = 1,
  OB_CHECK_STATUS_INCONCLUSIVE = 2,
} ob_check_status;

typedef enum ob_construction {
  OB_CONSTRUCTION_DIRECT = 0,
  OB_CONSTRUCTION_CONTROLLED = 1,
  OB_CONSTRUCTION_LOCALIZED = 2,
} ob_construction;

typedef enum ob_status {
  OB_STATUS_OK = 0,
  OB_STATUS_NULL_POINTER = 1,
  OB_STATUS_INVALID_UTF8 = 2,
  // The scenario or a run parameter is malformed.
  OB_STATUS_CONFIG = 3,
  // A path failed; the message names the path id.
  OB_STATUS_SIMULATION = 4,
  // An argument is out of range.
  OB_STATUS_ARGUMENT = 5,
  // A Rust panic was caught at the boundary.
  OB_STATUS_PANIC = 6,
} ob_status;

// One simulated path on its time grid.
typedef struct ob_path ob_path;

// A loaded scenario.
typedef struct ob_scenario ob_scenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a
// successful one. Valid until the next call into the library.
const char *ob_last_error(void);

// Library version as a static string.
const char *ob_version(void);

// # Safety
// `s` must be null or a string returned by this library, not yet freed.
void ob_string_free(char *s);

// Load a scenario file. The tolerance preset follows
// `OBLIQUA_TOL_PROFILE`.
//
// # Safety
// `path` must be a nul-terminated string and `out` writable.
enum ob_status ob_scenario_load(const char *path, struct ob_scenario **out);

// Parse scenario text with the named tolerance profile (`default`,
// `strict` or `loose`).
//
// # Safety
// `toml` and `profile` must be nul-terminated strings and `out` writable.
enum ob_status ob_scenario_parse(const char *toml, const char *profile, struct ob_scenario **out);

// # Safety
// `sc` must be null or a handle from this library, not yet freed.
void ob_scenario_free(struct ob_scenario *sc);

// Replace the horizon and grid step of the scenario's run settings.
//
// # Safety
// `sc` must be a live scenario handle.
enum ob_status ob_scenario_set_grid(struct ob_scenario *sc, double horizon, double dt);

// Run every condition check. Writes the overall status and, if
// `out_json` is not null, the reports as a JSON array to free with
// [`ob_string_free`].
//
// # Safety
// `sc` must be a live scenario handle, `status` writable and `out_json`
// null or writable.
enum ob_status ob_scenario_check(const struct ob_scenario *sc,
                                 enum ob_check_status *status,
                                 char **out_json);

// Terminal states of paths `0..n_paths` into `x1[i]`, `x2[i]` and, if
// not null, `lambda[i]`, each of length `n_paths`. Results do not depend
// on how many threads run them.
//
// # Safety
// `sc` must be a live scenario handle and the buffers must hold
// `n_paths` doubles.
enum ob_status ob_simulate_terminals(const struct ob_scenario *sc,
                                     enum ob_construction construction,
                                     uint64_t seed,
                                     uint64_t n_paths,
                                     double *x1,
                                     double *x2,
                                     double *lambda);

// Simulate the full record of one path.
//
// # Safety
// `sc` must be a live scenario handle and `out` writable.
enum ob_status ob_path_simulate(const struct ob_scenario *sc,
                                enum ob_construction construction,
                                uint64_t seed,
                                uint64_t path_id,
                                struct ob_path **out);

// Number of grid points, including time 0. Zero for a null handle.
//
// # Safety
// `p` must be null or a live path handle.
size_t ob_path_len(const struct ob_path *p);

// Time, state and local time at grid point `k`.
//
// # Safety
// `p` must be a live path handle; the outputs must be writable.
enum ob_status ob_path_point(const struct ob_path *p,
                             size_t k,
                             double *t,
                             double *x1,
                             double *x2,
                             double *lambda);

// The path as CSV text, to free with [`ob_string_free`].
//
// # Safety
// `p` must be a live path handle and `out` writable.
enum ob_status ob_path_csv(const struct ob_path *p, char **out);

// # Safety
// `p` must be null or a handle from this library, not yet freed.
void ob_path_free(struct ob_path *p);

// Two-sample Kolmogorov-Smirnov distance.
//
// # Safety
// `a` and `b` must hold `na` and `nb` doubles; `out` must be writable.
enum ob_status ob_ks_statistic(const double *a, size_t na, const double *b, size_t nb, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* OBLIQUA_H */
