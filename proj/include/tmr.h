/* tmr - closed-loop targeted-memory-reactivation engine and sleep-EEG
 * analysis toolkit. C API over the C++ core: opaque handles, status codes,
 * UTF-8 paths. All functions are thread-compatible (no shared mutable state
 * between distinct handles).
 */
#ifndef TMR_H
#define TMR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TMR_API __declspec(dllexport)
#else
#define TMR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum tmr_status {
  TMR_OK = 0,
  TMR_ERROR = 1,         /* unexpected failure */
  TMR_ERROR_CONFIG = 2,  /* invalid configuration or arguments */
  TMR_ERROR_DATA = 3,    /* missing/inconsistent data or files */
  TMR_ERROR_NUMERIC = 4  /* numerical failure */
} tmr_status;

TMR_API const char* tmr_version(void);
TMR_API const char* tmr_status_name(tmr_status status);

/* ---- pipeline engine ---------------------------------------------------
 * Owns one run configuration (JSON file format; see README) and executes
 * the pipeline stages against an output directory.
 */
typedef struct tmr_engine tmr_engine;

TMR_API tmr_status tmr_engine_create(tmr_engine** out);
TMR_API tmr_status tmr_engine_create_from_file(const char* config_path,
                                               tmr_engine** out);
TMR_API void tmr_engine_destroy(tmr_engine* engine);

/* Message for the most recent failing call on this handle; valid until the
 * next call or destroy. */
TMR_API const char* tmr_engine_last_error(const tmr_engine* engine);

TMR_API tmr_status tmr_engine_set_output_dir(tmr_engine* engine, const char* path);
TMR_API tmr_status tmr_engine_set_seed(tmr_engine* engine, uint64_t seed);
/* "all" | "l3" | "both" */
TMR_API tmr_status tmr_engine_set_condition(tmr_engine* engine, const char* condition);
TMR_API tmr_status tmr_engine_set_threads(tmr_engine* engine, int n_threads);
TMR_API tmr_status tmr_engine_set_force(tmr_engine* engine, int force);
/* 8-h sessions, 500 Hz synthesis, 12 participants per group. */
TMR_API tmr_status tmr_engine_set_full_scale(tmr_engine* engine, int full_scale);

TMR_API tmr_status tmr_run_simulate(tmr_engine* engine);
/* participant NULL or "" = all participants. */
TMR_API tmr_status tmr_run_schedule(tmr_engine* engine, const char* participant);
TMR_API tmr_status tmr_run_analyze(tmr_engine* engine);
TMR_API tmr_status tmr_run_decode(tmr_engine* engine);
TMR_API tmr_status tmr_run_report(tmr_engine* engine);
TMR_API tmr_status tmr_run_all(tmr_engine* engine);

/* ---- closed-loop cue scheduler ------------------------------------------
 * Embeddable state machine: compile a cue plan from pre-sleep behavior and
 * feed it staged 30-s epochs in chronological order. Cues are emitted only
 * inside stable N2/N3 (10 consecutive eligible epochs), every 8000 ms, with
 * the 4-s cue window contained in the current epoch.
 */
typedef struct tmr_scheduler tmr_scheduler;

typedef struct tmr_cue {
  int64_t onset_ms;
  int32_t item_id;
  int32_t pres_index;
  int32_t block_id;
  int32_t second_word_offset_ms;
} tmr_cue;

/* policy: "nostim" | "fixed" | "personalized". behavior_csv_path: pre-sleep
 * records ("item_id,session,level,correct,response_text"). */
TMR_API tmr_status tmr_scheduler_create(const char* policy,
                                        const char* behavior_csv_path,
                                        uint64_t seed, tmr_scheduler** out);
TMR_API void tmr_scheduler_destroy(tmr_scheduler* scheduler);
TMR_API const char* tmr_scheduler_last_error(const tmr_scheduler* scheduler);

/* stage: "W" | "R" | "N1" | "N2" | "N3". Writes up to `capacity` cues emitted
 * within the epoch starting at epoch_start_ms and stores the count in *n_out.
 * A 30-s epoch holds at most 4 cues. */
TMR_API tmr_status tmr_scheduler_step(tmr_scheduler* scheduler, const char* stage,
                                      int64_t epoch_start_ms, tmr_cue* cues,
                                      size_t capacity, size_t* n_out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* TMR_H */
