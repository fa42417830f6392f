#ifndef PROLEG_H
#define PROLEG_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum ProlegStatus {
  PROLEG_STATUS_OK = 0,
  PROLEG_STATUS_NULL_ARGUMENT = 1,
  PROLEG_STATUS_INVALID_UTF8 = 2,
  PROLEG_STATUS_PARSE_ERROR = 3,
  PROLEG_STATUS_ENGINE_ERROR = 4,
  PROLEG_STATUS_CONVERT_ERROR = 5,
  PROLEG_STATUS_CONFIG_ERROR = 6,
  PROLEG_STATUS_PANIC = 7,
} ProlegStatus;

typedef enum ProlegOutcome {
  /**
   * `o`: the query holds.
   */
  PROLEG_OUTCOME_SUCCESS = 0,
  /**
   * `x`: the query does not hold.
   */
  PROLEG_OUTCOME_FAILURE = 1,
} ProlegOutcome;

typedef enum ProlegTraceFormat {
  PROLEG_TRACE_FORMAT_JSON = 0,
  PROLEG_TRACE_FORMAT_DOT = 1,
  PROLEG_TRACE_FORMAT_TEXT = 2,
} ProlegTraceFormat;

/**
 * A ground fact base.
 */
typedef struct ProlegFacts ProlegFacts;

/**
 * A parsed rule program.
 */
typedef struct ProlegProgram ProlegProgram;

/**
 * Evaluation limits; obtain defaults from [`proleg_config_default`].
 */
typedef struct ProlegConfig {
  size_t max_depth;
  size_t max_steps;
  bool loop_check;
} ProlegConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * The last error message recorded on this thread, or null. The pointer
 * stays valid until the next `proleg_*` call on the same thread.
 */
const char *proleg_last_error(void);

struct ProlegConfig proleg_config_default(void);

/**
 * Parses PROLEG source into a new program handle.
 *
 * # Safety
 * `source` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum ProlegStatus proleg_program_parse(const char *source, struct ProlegProgram **out);

/**
 * # Safety
 * `program` is null or a handle from this library not yet freed.
 */
void proleg_program_free(struct ProlegProgram *program);

/**
 * # Safety
 * `program` is a live handle or null.
 */
size_t proleg_program_rule_count(const struct ProlegProgram *program);

/**
 * # Safety
 * `program` is a live handle or null.
 */
size_t proleg_program_exception_count(const struct ProlegProgram *program);

/**
 * Canonical PROLEG text of the program.
 *
 * # Safety
 * `program` is a live handle; `out` must be valid for writes.
 */
enum ProlegStatus proleg_program_serialize(const struct ProlegProgram *program, char **out);

/**
 * Parses a `.facts` document of ground atoms.
 *
 * # Safety
 * `source` must be a NUL-terminated string; `out` must be valid for writes.
 */
enum ProlegStatus proleg_facts_parse(const char *source, struct ProlegFacts **out);

/**
 * # Safety
 * `facts` is null or a handle from this library not yet freed.
 */
void proleg_facts_free(struct ProlegFacts *facts);

/**
 * Proves `query` and reports the outcome. When `trace_json` is non-null it
 * receives the reasoning tree as a versioned JSON document. `config` may be
 * null for the defaults.
 *
 * # Safety
 * Handles must be live; `query` NUL-terminated; `outcome` valid for writes;
 * `config` and `trace_json` null or valid.
 */
enum ProlegStatus proleg_solve(const struct ProlegProgram *program,
                               const struct ProlegFacts *facts,
                               const char *query,
                               const struct ProlegConfig *config,
                               enum ProlegOutcome *outcome,
                               char **trace_json);

/**
 * Re-renders a JSON trace from [`proleg_solve`] as JSON, DOT or indented text.
 *
 * # Safety
 * `trace_json` NUL-terminated; `out` valid for writes.
 */
enum ProlegStatus proleg_trace_render(const char *trace_json,
                                      enum ProlegTraceFormat format,
                                      char **out);

/**
 * Lint findings as a JSON array. `config_json` may be null for defaults.
 *
 * # Safety
 * `program` live; `config_json` null or NUL-terminated; `out` valid for writes.
 */
enum ProlegStatus proleg_lint_json(const struct ProlegProgram *program,
                                   const char *config_json,
                                   char **out);

/**
 * Converts Prolog-subset source into a new program handle. When `report`
 * is non-null it receives the conversion summary.
 *
 * # Safety
 * `prolog` NUL-terminated; `out` valid for writes; `report` null or valid.
 */
enum ProlegStatus proleg_convert(const char *prolog, struct ProlegProgram **out, char **report);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` is null or a string from this library not yet freed.
 */
void proleg_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PROLEG_H */
