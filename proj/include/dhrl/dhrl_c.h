/* C API for the DHRL laboratory. All functions return a dhrl_status; on
 * failure, dhrl_last_error() describes the problem for the calling thread.
 * Objects are opaque handles released with their matching _destroy call. */
#ifndef DHRL_DHRL_C_H
#define DHRL_DHRL_C_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define DHRL_API __declspec(dllexport)
#else
#define DHRL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum dhrl_status {
  DHRL_OK = 0,
  DHRL_ERR_INVALID_ARGUMENT = 1,
  DHRL_ERR_CONFIG = 2,
  DHRL_ERR_IO = 3,
  DHRL_ERR_CONTRACT = 4,
  DHRL_ERR_RUNTIME = 5
} dhrl_status;

typedef struct dhrl_env dhrl_env;

DHRL_API const char* dhrl_version(void);

/* Message for the most recent failure on this thread; never NULL. */
DHRL_API const char* dhrl_last_error(void);

DHRL_API void dhrl_string_free(char* text);

/* --- Environments ------------------------------------------------------- */

DHRL_API dhrl_status dhrl_env_create_from_file(const char* config_path, dhrl_env** out_env);
DHRL_API dhrl_status dhrl_env_create_from_string(const char* config_text, dhrl_env** out_env);
DHRL_API void dhrl_env_destroy(dhrl_env* env);

DHRL_API int dhrl_env_num_states(const dhrl_env* env);
DHRL_API int dhrl_env_num_actions(const dhrl_env* env);
DHRL_API int dhrl_env_num_observations(const dhrl_env* env);
DHRL_API int dhrl_env_horizon(const dhrl_env* env);

/* History symbols alternate o_1, a_1, o_2, ..., o_t (length = 2t - 1; 0 for
 * the empty history). out_belief must hold num_states doubles. */
DHRL_API dhrl_status dhrl_env_exact_belief(const dhrl_env* env, const int32_t* history,
                                           size_t history_len, double* out_belief);

/* Test symbols alternate a, o pairs (length must be even). */
DHRL_API dhrl_status dhrl_env_future_probability(const dhrl_env* env, const int32_t* history,
                                                 size_t history_len, const int32_t* test,
                                                 size_t test_len, double* out_probability);

/* --- Runs --------------------------------------------------------------- */

/* Trains per the config file and writes metrics/checkpoints/reports under
 * out_dir. seed_override < 0 keeps the config seed. On success *out_summary
 * (optional) receives malloc'd JSON, freed with dhrl_string_free. */
DHRL_API dhrl_status dhrl_train_run(const char* config_path, const char* out_dir,
                                    int64_t seed_override, char** out_summary);

/* Evaluates a checkpoint; *out_report receives the JSON report. */
DHRL_API dhrl_status dhrl_eval_checkpoint(const char* checkpoint_path, int episodes,
                                          int64_t seed_override, char** out_report);

/* Runs the ablation grid described by spec_path; writes ablation.csv under
 * out_dir. threads <= 0 means one worker. */
DHRL_API dhrl_status dhrl_ablate(const char* spec_path, const char* out_dir,
                                 int64_t seed_override, int threads);

/* Runs the oracle/conjugate/gradient/calibration/structural suite. Fills
 * *out_failures with the failing-check count; prints one line per check to
 * stdout when verbose is nonzero. */
DHRL_API dhrl_status dhrl_verify(int verbose, int* out_failures);

/* Tidy CSV (iteration, metric, value) from a run directory's metrics. */
DHRL_API dhrl_status dhrl_plot_data(const char* run_dir, char** out_csv);

#ifdef __cplusplus
}
#endif

#endif
