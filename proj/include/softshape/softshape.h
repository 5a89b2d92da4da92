/* C interface to the softshape shape model, roof controller and scenario runner.
 *
 * Lengths are in metres unless a name says otherwise, voltages in volts.
 * Every call returns an ss_status; on failure ss_last_error() describes the
 * most recent error on the calling thread. Handles are not thread-safe. */
#ifndef SOFTSHAPE_H
#define SOFTSHAPE_H

#include <stddef.h>
#include <stdint.h>

#if defined(SOFTSHAPE_BUILDING)
#define SS_API __attribute__((visibility("default")))
#else
#define SS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values match the CLI exit codes. */
typedef enum ss_status {
  SS_OK = 0,
  SS_ERR_INTERNAL = 1,
  SS_ERR_INPUT = 2,
  SS_ERR_SOLVER = 3,
  SS_ERR_SAFETY = 4
} ss_status;

typedef enum ss_ground { SS_GROUND_ON = 0, SS_GROUND_OFF = 1 } ss_ground;

typedef struct ss_model ss_model;
typedef struct ss_roof ss_roof;

typedef struct ss_optimizer_options {
  int budget;
  int init_samples;
  uint64_t seed;
  int symmetric;       /* ties V1=V5, V2=V4 */
  const double* lower; /* n_actuators bounds, or NULL for -1500 V */
  const double* upper; /* n_actuators bounds, or NULL for +500 V */
  const double* warm_start; /* n_actuators volts evaluated first, or NULL */
} ss_optimizer_options;

typedef struct ss_command_info {
  double loss;
  double x0;
  double dy_max_cm;
  double dy_min_cm;
  double peak_cm;
  int fallback;
  int evaluations;
} ss_command_info;

typedef struct ss_run_options {
  const char* out_dir;     /* NULL keeps the config's run.output_dir */
  const char* target_csv;  /* shape-control target, NULL for the config targets */
  const char* roof;        /* step, slant, sine or file:PATH; NULL keeps the config roof */
  const char* samples_dir; /* calibrate */
  int has_seed;
  uint64_t seed;
  int verbose; /* progress on stderr */
} ss_run_options;

SS_API const char* ss_version(void);
SS_API const char* ss_last_error(void);

SS_API void ss_optimizer_options_default(ss_optimizer_options* options);
SS_API void ss_run_options_default(ss_run_options* options);

/* robot_json: the "robot" section of a scenario config (cm units), or NULL
 * for the default robot. */
SS_API ss_status ss_model_create(const char* robot_json, ss_model** out);
SS_API void ss_model_destroy(ss_model* model);
SS_API size_t ss_model_nodes(const ss_model* model);
SS_API size_t ss_model_actuators(const ss_model* model);
SS_API double ss_model_length(const ss_model* model);

/* Physics only. pressure may be NULL; both arrays hold ss_model_nodes values. */
SS_API ss_status ss_model_solve(const ss_model* model, const double* volts, size_t n_volts,
                                ss_ground ground, double* y, double* pressure, size_t n_nodes);
/* Physics plus the calibrated correction, if any. */
SS_API ss_status ss_model_predict(const ss_model* model, const double* volts, size_t n_volts,
                                  double* y, size_t n_nodes);

/* LMS calibration from sensed shapes on the model grid. volts is
 * n_samples x n_actuators, sensed_y is n_samples x n_nodes, both row-major.
 * learning_rate <= 0 picks 0.5 / max |V|^2. */
SS_API ss_status ss_model_calibrate(ss_model* model, const double* volts, const double* sensed_y,
                                    size_t n_samples, int epochs, double learning_rate);
SS_API ss_status ss_model_clear_correction(ss_model* model);
SS_API ss_status ss_model_write_correction(const ss_model* model, const char* path);

SS_API ss_status ss_chord_shortening(const double* y, size_t n_nodes, double length, double* out);
SS_API ss_status ss_stride(const ss_model* model, const double* bent_volts, size_t n_volts, double* out);

/* roof_json: a scenario "roof" section (cm units). */
SS_API ss_status ss_roof_create(const char* roof_json, ss_roof** out);
SS_API ss_status ss_roof_create_builtin(const char* name, double margin, ss_roof** out);
SS_API void ss_roof_destroy(ss_roof* roof);
/* +infinity where there is no roof. */
SS_API ss_status ss_roof_safety_height(const ss_roof* roof, double x, double* out);

SS_API ss_status ss_solve_target(const ss_model* model, const double* target_y, size_t n_nodes,
                                 const ss_optimizer_options* options, double* volts_out, size_t n_volts,
                                 ss_command_info* info);
SS_API ss_status ss_solve_roof(const ss_model* model, const ss_roof* roof, double x0,
                               const ss_optimizer_options* options, double* volts_out, size_t n_volts,
                               ss_command_info* info);

/* Runs a CLI subcommand on a scenario config given as JSON text. Returns the
 * exit code (0, 2, 3 or 4) as a status. */
SS_API ss_status ss_run_scenario(const char* command, const char* config_json, const ss_run_options* options);

#ifdef __cplusplus
}
#endif

#endif
