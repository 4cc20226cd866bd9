/* imbopt - per-class-normalized gradient descent experiment library.
 *
 * C interface to the shared library. All functions return imbopt_status
 * unless noted; on failure a human-readable message is available from
 * imbopt_last_error() (thread-local) or imbopt_experiment_error() for
 * handle-scoped failures.
 */
#ifndef IMBOPT_H
#define IMBOPT_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum imbopt_status {
    IMBOPT_OK = 0,
    IMBOPT_ERR_INVALID_ARG = 1,   /* null pointer / bad handle / bad name */
    IMBOPT_ERR_CONFIG = 2,        /* unparseable or inconsistent configuration */
    IMBOPT_ERR_IO = 3,            /* file could not be read or written */
    IMBOPT_ERR_DOMAIN = 4,        /* value outside an operation's domain */
    IMBOPT_ERR_VIOLATION = 5,     /* a theorem battery reported violations */
    IMBOPT_ERR_INTERNAL = 6
} imbopt_status;

/* Library version, e.g. "0.1.0". Static storage; do not free. */
const char* imbopt_version(void);

/* Static description of a status code. */
const char* imbopt_status_message(imbopt_status status);

/* Message of the most recent failure on this thread (empty string if none). */
const char* imbopt_last_error(void);

/* ---- experiments ----------------------------------------------------- */

typedef struct imbopt_experiment imbopt_experiment;

/* Create an experiment from a JSON config (schema version 1). */
imbopt_status imbopt_experiment_from_file(const char* config_path, imbopt_experiment** out);
imbopt_status imbopt_experiment_from_json(const char* json_text, imbopt_experiment** out);

/* Optional overrides applied before running. seeds is a comma-separated
 * list, e.g. "1,2,3". */
imbopt_status imbopt_experiment_set_output_dir(imbopt_experiment* e, const char* dir);
imbopt_status imbopt_experiment_set_seeds(imbopt_experiment* e, const char* seeds);

/* Runs every seed; writes run_<seed>.csv, summary.csv, aggregate.csv and
 * manifest.json under the output directory. threads <= 0 uses the
 * IMBOPT_THREADS environment variable, then the hardware default. */
imbopt_status imbopt_experiment_run(imbopt_experiment* e, int threads);

/* Results of the last run. */
size_t imbopt_experiment_seed_count(const imbopt_experiment* e);
imbopt_status imbopt_experiment_seed_result(const imbopt_experiment* e, size_t index,
                                            uint64_t* seed, int* diverged, double* macro_recall,
                                            double* tau, int* mid_present);

/* Message of the most recent failure involving this handle. */
const char* imbopt_experiment_error(const imbopt_experiment* e);

void imbopt_experiment_destroy(imbopt_experiment* e);

/* ---- theorem batteries ------------------------------------------------ */

/* Comma-separated list of valid battery names. Static storage. */
const char* imbopt_battery_names(void);

/* Runs one battery and writes its report CSV. Returns IMBOPT_ERR_VIOLATION
 * when any check with satisfied hypotheses fails; *violations (optional)
 * receives the count either way. quick != 0 runs a reduced-size battery. */
imbopt_status imbopt_theory_run(const char* battery, const char* out_csv, uint64_t seed,
                                int quick, size_t* violations);

/* ---- dataset generation ----------------------------------------------- */

/* spec_json: {"profile": {...}, "dim": N, "separation": X} using the same
 * profile schema as experiment configs. Writes the train CSV at out_csv,
 * a balanced test CSV alongside it, and a JSON manifest. */
imbopt_status imbopt_gen_data(const char* spec_json, uint64_t seed, const char* out_csv,
                              const char* out_manifest);

#ifdef __cplusplus
}
#endif

#endif /* IMBOPT_H */
