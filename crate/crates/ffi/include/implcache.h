#ifndef IMPLCACHE_H
#define IMPLCACHE_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Values accepted by [`ic_engine_new`] as `strategy`.
#define IC_STRATEGY_NONE 0

#define IC_STRATEGY_EXACT 1

#define IC_STRATEGY_LOGIC 2

typedef enum IcStatus {
  IC_STATUS_OK = 0,
  IC_STATUS_NULL_POINTER = 1,
  IC_STATUS_INVALID_UTF8 = 2,
  IC_STATUS_SYNTAX = 3,
  IC_STATUS_INVALID_ARGUMENT = 4,
  IC_STATUS_IO = 5,
  IC_STATUS_MALFORMED = 6,
  IC_STATUS_VERSION_MISMATCH = 7,
  IC_STATUS_INTERNAL = 8,
} IcStatus;

typedef enum IcAnswer {
  IC_ANSWER_SAT = 0,
  IC_ANSWER_UNSAT = 1,
  IC_ANSWER_UNKNOWN = 2,
} IcAnswer;

typedef enum IcProvenance {
  IC_PROVENANCE_SOLVED = 0,
  IC_PROVENANCE_EXACT_HIT = 1,
  IC_PROVENANCE_REUSED_SAT = 2,
  IC_PROVENANCE_REUSED_UNSAT = 3,
  IC_PROVENANCE_REDUCED_CONFLICT = 4,
} IcProvenance;

// Opaque cache handle.
typedef struct IcEngine IcEngine;

typedef struct IcStats {
  uint64_t queries;
  uint64_t solver_calls;
  uint64_t exact_hits;
  uint64_t reused_sat;
  uint64_t reused_unsat;
  uint64_t reduced_conflicts;
  uint64_t unknown;
} IcStats;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Creates an engine with empty stores. `strategy` is one of the
// `IC_STRATEGY_*` values; `bound` is the solver search radius. Returns
// null on an unknown strategy or a zero bound.
struct IcEngine *ic_engine_new(uint32_t strategy, uint64_t bound);

// # Safety
// `engine` is null or a handle from [`ic_engine_new`] not yet freed.
void ic_engine_free(struct IcEngine *engine);

// Declares that queries stay inside the generator envelope, so a failed
// bounded search is stored as unsatisfiable.
//
// # Safety
// `engine` is a live handle.
enum IcStatus ic_engine_set_envelope(struct IcEngine *engine, bool enabled);

// Answers one constraint. Only the connected components of the last
// `fresh_count` comparisons are considered (all of them when 0). The
// solution, if any, is kept for [`ic_engine_last_solution`].
//
// # Safety
// `engine` is a live handle, `constraint` a NUL-terminated string, and the
// out pointers are null or writable.
enum IcStatus ic_engine_query(struct IcEngine *engine,
                              const char *constraint,
                              uintptr_t fresh_count,
                              enum IcAnswer *answer_out,
                              enum IcProvenance *provenance_out);

// Solution of the last satisfiable query as `x=1 y=-3`, or null when the
// last query had none. Free with [`ic_string_free`].
//
// # Safety
// `engine` is null or a live handle.
char *ic_engine_last_solution(const struct IcEngine *engine);

// Writes the stores into directory `dir`.
//
// # Safety
// `engine` is a live handle and `dir` a NUL-terminated string.
enum IcStatus ic_engine_save(const struct IcEngine *engine, const char *dir);

// Replaces the stores with those saved in directory `dir`. On failure the
// engine is unchanged.
//
// # Safety
// `engine` is a live handle and `dir` a NUL-terminated string.
enum IcStatus ic_engine_load(struct IcEngine *engine, const char *dir);

// # Safety
// `engine` is a live handle and `out` writable.
enum IcStatus ic_engine_stats(const struct IcEngine *engine, struct IcStats *out);

// Canonical rendering of `constraint` in `*out` (`false` for a
// conjunction with a false constant comparison). Free with
// [`ic_string_free`].
//
// # Safety
// `constraint` is a NUL-terminated string and `out` writable.
enum IcStatus ic_canonize(const char *constraint, char **out);

// Message of the last failure on this thread, or null. Free with
// [`ic_string_free`].
char *ic_last_error_message(void);

// # Safety
// `s` is null or a string returned by this library, not yet freed.
void ic_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* IMPLCACHE_H */
