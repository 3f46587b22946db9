#ifndef PACEQ_H
#define PACEQ_H

/* Generated by cbindgen from the paceq-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum {
  // The call succeeded.
  PACEQ_STATUS_OK = 0,
  // Market data violates a structural invariant.
  PACEQ_STATUS_INVALID_INSTANCE = 1,
  // A query left the mathematical domain of an operation.
  PACEQ_STATUS_DOMAIN = 2,
  // Tie-break shares do not match the realized ties.
  PACEQ_STATUS_TIE_BREAK = 3,
  // An enumeration request exceeds the built-in size guard.
  PACEQ_STATUS_SIZE_GUARD = 4,
  // JSON input could not be parsed.
  PACEQ_STATUS_PARSE = 5,
  // The welfare linear program failed.
  PACEQ_STATUS_LINEAR_PROGRAM = 6,
  // A required pointer argument was null.
  PACEQ_STATUS_NULL_POINTER = 7,
  // A string argument was not valid UTF-8.
  PACEQ_STATUS_INVALID_UTF8 = 8,
  // An internal invariant failed; the library state is still sound.
  PACEQ_STATUS_PANIC = 9,
} PaceqStatus;

// Opaque parsed scenario.
typedef struct PaceqScenario PaceqScenario;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the most recent failure on this thread, as a NUL-terminated
// string. Empty when no failure has occurred. The pointer stays valid
// until the next failing call on the same thread.
const char *paceq_last_error(void);

// Parses a scenario JSON document into an opaque handle.
//
// On success writes the handle to `out` and returns `PACEQ_STATUS_OK`;
// the caller owns the handle and releases it with
// `paceq_scenario_free()`.
//
// # Safety
// `json` must be null or NUL-terminated; `out` must be null or valid for
// a pointer write.
PaceqStatus paceq_scenario_parse(const char *json, PaceqScenario **out);

// Releases a scenario handle. Null is a no-op.
//
// # Safety
// `scenario` must be null or a handle produced by
// `paceq_scenario_parse()` that has not been freed.
void paceq_scenario_free(PaceqScenario *scenario);

// Serializes the fully resolved configuration (defaults filled in) back
// to JSON. The returned string is released with `paceq_string_free()`.
//
// # Safety
// `scenario` must be a live handle; `out` must be valid for a pointer
// write.
PaceqStatus paceq_scenario_to_json(const PaceqScenario *scenario, char **out);

// Runs one operation against a scenario.
//
// `operation_json` names the operation, e.g. `{"command": "solve"}` or
// `{"command": "frontier", "buyer": 1}`. Commands match the CLI:
// validate, run, frontier, solve, verify, enumerate, bounds,
// posted-price, expect.
//
// On success writes a JSON report to `out` (released with
// `paceq_string_free()`). The report's `"passed"` field carries the
// assertion-level verdict; a profile that fails verification is still a
// successful call.
//
// # Safety
// `scenario` must be a live handle; `operation_json` must be null or
// NUL-terminated; `out` must be valid for a pointer write.
PaceqStatus paceq_execute(const PaceqScenario *scenario, const char *operation_json, char **out);

// Releases a string returned by this library. Null is a no-op.
//
// # Safety
// `text` must be null or a string produced by this library that has not
// been freed.
void paceq_string_free(char *text);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PACEQ_H */
