#ifndef UNSURE_H
#define UNSURE_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Default master seed for the acceptance battery and the CLI; the
   UNSURE_SEED environment variable overrides it everywhere. */
#define UNSURE_DEFAULT_SEED UINT64_C(12345)

typedef enum unsure_status {
  UNSURE_OK = 0,
  UNSURE_ERR_INVALID = 1,  /* bad arguments or malformed inputs */
  UNSURE_ERR_CONFIG = 2,   /* config parsing or validation failed */
  UNSURE_ERR_IO = 3,       /* file read/write failed */
  UNSURE_ERR_NUMERIC = 4,  /* degenerate or non-finite computation */
  UNSURE_ERR_INTERNAL = 5  /* unexpected exception */
} unsure_status;

const char* unsure_version(void);

/* Message for the most recent failure on this thread; empty when none. */
const char* unsure_last_error(void);

typedef struct unsure_report unsure_report; /* opaque run report */

/* Parses config_json, applies "dotted.key=value" overrides in order, runs
   the experiment, and writes <experiment>.csv/.json plus any curve files
   under out_dir (skipped when out_dir is NULL or empty). On success sets
   *out_report, which the caller frees with unsure_report_free. */
unsure_status unsure_run_experiment(const char* config_json,
                                    const char* const* overrides,
                                    size_t n_overrides, const char* out_dir,
                                    unsure_report** out_report);

/* Same, reading the config from a JSON file. */
unsure_status unsure_run_config_file(const char* path,
                                     const char* const* overrides,
                                     size_t n_overrides, const char* out_dir,
                                     unsure_report** out_report);

/* Runs the twelve acceptance criteria, printing one pass/fail line per
   criterion to stdout and writing acceptance.csv under out_dir (when
   nonempty). Returns UNSURE_OK even when criteria fail; *out_failures
   carries the failing count. */
unsure_status unsure_run_acceptance(const char* out_dir, uint64_t seed,
                                    int* out_failures);

/* 1 when every metric row passed, else 0. */
int unsure_report_all_pass(const unsure_report* r);

/* Borrowed strings, valid until unsure_report_free. */
const char* unsure_report_csv(const unsure_report* r);
const char* unsure_report_json(const unsure_report* r);

void unsure_report_free(unsure_report* r);

#ifdef __cplusplus
}
#endif

#endif /* UNSURE_H */
