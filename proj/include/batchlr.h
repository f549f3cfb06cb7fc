/* C interface to the batch list-decoding library.
 *
 * Every function returns a blr_status (except the accessors on handles that
 * cannot fail once the handle exists). On any non-OK status the thread-local
 * message from blr_last_error() describes what went wrong. Handles are
 * created and destroyed by the library; never free them with free().
 */
#ifndef BATCHLR_H
#define BATCHLR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define BLR_API __declspec(dllexport)
#else
#define BLR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Matches the process exit codes of the command layer. */
typedef enum blr_status {
  BLR_OK = 0,
  BLR_E_ARG = 1,       /* null pointer or out-of-range argument */
  BLR_E_CONFIG = 2,    /* config text failed to parse or validate */
  BLR_E_INVARIANT = 3, /* internal invariant or check-suite failure */
  BLR_E_IO = 4         /* file could not be read or written */
} blr_status;

typedef struct blr_config blr_config;
typedef struct blr_result blr_result;

BLR_API const char* blr_version(void);

/* Message for the most recent failure on this thread; empty string if the
 * last call succeeded. The pointer stays valid until the next library call
 * on the same thread. */
BLR_API const char* blr_last_error(void);

/* Frees strings returned through char** out-parameters. */
BLR_API void blr_string_free(char* s);

/* --- experiment configuration ------------------------------------------ */

/* Parses a JSON experiment document. Unknown fields are rejected. */
BLR_API blr_status blr_config_parse(const char* json_text, blr_config** out);

/* Canonical JSON for the configuration (allocated; free with
 * blr_string_free). Two configs with equal text behave identically. */
BLR_API blr_status blr_config_dump(const blr_config* cfg, char** out_text);

/* Hash of the canonical text, 16 hex characters plus NUL. */
BLR_API blr_status blr_config_hash(const blr_config* cfg, char out[17]);

BLR_API blr_status blr_config_set_seed(blr_config* cfg, uint64_t seed);
BLR_API blr_status blr_config_set_trials(blr_config* cfg, int trials);

BLR_API void blr_config_free(blr_config* cfg);

/* --- single trials ------------------------------------------------------ */

/* Runs one seeded trial of the full decoder and returns a result handle.
 * Trials are independent: randomness derives from the config seed, the
 * problem cell, and the trial index. */
BLR_API blr_status blr_run_trial(const blr_config* cfg, int trial,
                                 blr_result** out);

BLR_API blr_status blr_result_list_size(const blr_result* res, int* out);
BLR_API blr_status blr_result_dim(const blr_result* res, int* out);
/* Distance from the best list element to the generating regressor. */
BLR_API blr_status blr_result_min_error(const blr_result* res, double* out);
BLR_API blr_status blr_result_wall_ms(const blr_result* res, double* out);
/* Inlier-only least squares on a fresh sample; -1 when unavailable. */
BLR_API blr_status blr_result_baseline_error(const blr_result* res,
                                             double* out);
BLR_API blr_status blr_result_batches_drawn(const blr_result* res,
                                            uint64_t* out);
/* Copies candidate `index` into `out`, which must hold blr_result_dim
 * doubles. */
BLR_API blr_status blr_result_candidate(const blr_result* res, int index,
                                        double* out);
BLR_API blr_status blr_result_weight(const blr_result* res, int index,
                                     double* out);

BLR_API void blr_result_free(blr_result* res);

/* --- command layer ------------------------------------------------------ */

typedef struct blr_options {
  const char* config_path; /* NULL when the subcommand needs no config */
  const char* out_dir;     /* NULL means "." */
  const uint64_t* seed;    /* NULL keeps the config's seed */
  const int* trials;       /* NULL keeps the config's trial count */
  int deterministic_filter;
} blr_options;

/* Runs one subcommand end to end, writing its output files under out_dir.
 * Names: generate, run, sweep, reduce, mz-check, cert-check, prune-check.
 * The return value doubles as a process exit code. */
BLR_API int blr_cmd(const char* name, const blr_options* opt);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* BATCHLR_H */
