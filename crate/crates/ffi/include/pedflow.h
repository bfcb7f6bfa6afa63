#ifndef PEDFLOW_H
#define PEDFLOW_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum PedflowStatus {
  PEDFLOW_STATUS_OK = 0,
  PEDFLOW_STATUS_NULL_POINTER = 1,
  PEDFLOW_STATUS_INVALID_ARGUMENT = 2,
  PEDFLOW_STATUS_STEP_BOUND = 3,
  PEDFLOW_STATUS_OUTSIDE_DOMAIN = 4,
  PEDFLOW_STATUS_RUNTIME = 5,
  PEDFLOW_STATUS_IO = 6,
  PEDFLOW_STATUS_PARSE = 7,
  PEDFLOW_STATUS_GRID_MISMATCH = 8,
  PEDFLOW_STATUS_OUT_OF_RANGE = 9,
  PEDFLOW_STATUS_BUFFER_TOO_SMALL = 10,
  PEDFLOW_STATUS_NOT_CROSSED = 11,
  PEDFLOW_STATUS_PANIC = 12,
} PedflowStatus;

/**
 * Subcommand selector for [`pedflow_execute`].
 */
typedef enum PedflowCommand {
  PEDFLOW_COMMAND_MICRO = 0,
  PEDFLOW_COMMAND_MACRO = 1,
  PEDFLOW_COMMAND_COMPARE = 2,
  PEDFLOW_COMMAND_VALIDATE = 3,
} PedflowCommand;

/**
 * Opaque handle to a finished Monte-Carlo ensemble.
 */
typedef struct PedflowEnsemble PedflowEnsemble;

/**
 * Opaque handle to a finished macroscopic run.
 */
typedef struct PedflowMacroRun PedflowMacroRun;

/**
 * Opaque handle to a micro/macro comparison.
 */
typedef struct PedflowReport PedflowReport;

/**
 * Opaque scenario handle.
 */
typedef struct PedflowScenario PedflowScenario;

/**
 * Grid layout; cell `(i, j)` is stored at `j * nx + i`.
 */
typedef struct PedflowGridInfo {
  size_t nx;
  size_t ny;
  double dx;
  double dy;
  double x0;
  double y0;
} PedflowGridInfo;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `cap` bytes) and returns the full message length without the
 * terminator; 0 if there is no error.
 *
 * # Safety
 * `buf` must be null or point to `cap` writable bytes.
 */
size_t pedflow_last_error(char *buf, size_t cap);

/**
 * Static, NUL-terminated name of a status code.
 */
const char *pedflow_status_name(enum PedflowStatus status);

/**
 * Parses a scenario from JSON text.
 *
 * # Safety
 * `json` must be a NUL-terminated string; `out` must be writable.
 */
enum PedflowStatus pedflow_scenario_from_json(const char *json, struct PedflowScenario **out);

/**
 * Loads a bundled scenario by name.
 *
 * # Safety
 * `name` must be a NUL-terminated string; `out` must be writable.
 */
enum PedflowStatus pedflow_scenario_preset(const char *name, struct PedflowScenario **out);

/**
 * Serialises a scenario to JSON; release the string with
 * [`pedflow_string_free`].
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum PedflowStatus pedflow_scenario_to_json(const struct PedflowScenario *scenario, char **out);

/**
 * Overrides seed, pedestrian count and replicate count; a zero count keeps
 * the current value.
 *
 * # Safety
 * `scenario` must be a live handle.
 */
enum PedflowStatus pedflow_scenario_configure(struct PedflowScenario *scenario,
                                              uint64_t seed,
                                              size_t pedestrians,
                                              size_t replicates);

/**
 * # Safety
 * `scenario` must be null or a handle not yet freed.
 */
void pedflow_scenario_free(struct PedflowScenario *scenario);

/**
 * # Safety
 * `s` must be null or a string returned by this library and not yet freed.
 */
void pedflow_string_free(char *s);

/**
 * Runs a command and writes its CSV artifacts into `out_dir`.
 *
 * # Safety
 * `scenario` must be a live handle; `out_dir` a NUL-terminated path.
 */
enum PedflowStatus pedflow_execute(enum PedflowCommand command,
                                   const struct PedflowScenario *scenario,
                                   const char *out_dir);

/**
 * Runs the macroscopic solver.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum PedflowStatus pedflow_run_macro(const struct PedflowScenario *scenario,
                                     struct PedflowMacroRun **out);

/**
 * # Safety
 * `run` must be null or a handle not yet freed.
 */
void pedflow_macro_run_free(struct PedflowMacroRun *run);

/**
 * # Safety
 * `run` must be a live handle; `out` must be writable.
 */
enum PedflowStatus pedflow_macro_run_grid(const struct PedflowMacroRun *run,
                                          struct PedflowGridInfo *out);

/**
 * Number of recorded snapshots; 0 for a null handle.
 *
 * # Safety
 * `run` must be null or a live handle.
 */
size_t pedflow_macro_run_snapshot_count(const struct PedflowMacroRun *run);

/**
 * Copies snapshot `k`: its time and the `u0`, `u1` cell arrays, each of
 * `len ≥ nx·ny` values. Either array pointer may be null to skip it.
 *
 * # Safety
 * `run` must be a live handle; non-null buffers must hold `len` doubles.
 */
enum PedflowStatus pedflow_macro_run_snapshot(const struct PedflowMacroRun *run,
                                              size_t k,
                                              double *t,
                                              double *u0,
                                              double *u1,
                                              size_t len);

/**
 * Total mass after the last step.
 *
 * # Safety
 * `run` must be a live handle; `out` must be writable.
 */
enum PedflowStatus pedflow_macro_run_final_mass(const struct PedflowMacroRun *run, double *out);

/**
 * Runs the Monte-Carlo ensemble.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must be writable.
 */
enum PedflowStatus pedflow_run_ensemble(const struct PedflowScenario *scenario,
                                        struct PedflowEnsemble **out);

/**
 * # Safety
 * `ensemble` must be null or a handle not yet freed.
 */
void pedflow_ensemble_free(struct PedflowEnsemble *ensemble);

/**
 * # Safety
 * `ensemble` must be a live handle; `out` must be writable.
 */
enum PedflowStatus pedflow_ensemble_grid(const struct PedflowEnsemble *ensemble,
                                         struct PedflowGridInfo *out);

/**
 * Number of snapshot times; 0 for a null handle.
 *
 * # Safety
 * `ensemble` must be null or a live handle.
 */
size_t pedflow_ensemble_snapshot_count(const struct PedflowEnsemble *ensemble);

/**
 * Copies the empirical density at snapshot `k`.
 *
 * # Safety
 * `ensemble` must be a live handle; `density` must hold `len` doubles.
 */
enum PedflowStatus pedflow_ensemble_density(const struct PedflowEnsemble *ensemble,
                                            size_t k,
                                            double *t,
                                            double *density,
                                            size_t len);

/**
 * Mean stopped fraction over replicates at every micro step (`steps + 1`
 * values including the initial state).
 *
 * # Safety
 * `ensemble` must be a live handle; `out` must hold `len` doubles;
 * `written` must be writable.
 */
enum PedflowStatus pedflow_ensemble_stopped_fraction(const struct PedflowEnsemble *ensemble,
                                                     double *out,
                                                     size_t len,
                                                     size_t *written);

/**
 * Compares an ensemble with a macroscopic run on the same grid.
 *
 * # Safety
 * Both inputs must be live handles; `out` must be writable.
 */
enum PedflowStatus pedflow_compare(const struct PedflowEnsemble *ensemble,
                                   const struct PedflowMacroRun *run,
                                   struct PedflowReport **out);

/**
 * # Safety
 * `report` must be null or a handle not yet freed.
 */
void pedflow_report_free(struct PedflowReport *report);

/**
 * Number of compared snapshot times; 0 for a null handle.
 *
 * # Safety
 * `report` must be null or a live handle.
 */
size_t pedflow_report_len(const struct PedflowReport *report);

/**
 * Time, L¹ and L² error at compared snapshot `k`.
 *
 * # Safety
 * `report` must be a live handle; output pointers must be writable.
 */
enum PedflowStatus pedflow_report_error(const struct PedflowReport *report,
                                        size_t k,
                                        double *t,
                                        double *l1,
                                        double *l2);

/**
 * Macroscopic crossing time at cut `c`; [`PedflowStatus::NotCrossed`] if
 * the threshold was never reached.
 *
 * # Safety
 * `report` must be a live handle; `out` must be writable.
 */
enum PedflowStatus pedflow_report_macro_crossing(const struct PedflowReport *report,
                                                 size_t c,
                                                 double *out);

/**
 * Mean microscopic crossing time at cut `c` over the replicates that
 * crossed; their number goes to `crossed`.
 *
 * # Safety
 * `report` must be a live handle; output pointers must be writable.
 */
enum PedflowStatus pedflow_report_micro_crossing(const struct PedflowReport *report,
                                                 size_t c,
                                                 double *out,
                                                 size_t *crossed);

/**
 * Exact two-state reaction over `dt` for one cell.
 *
 * # Safety
 * `u0` and `u1` must be writable; they are updated in place.
 */
enum PedflowStatus pedflow_reaction_update(double lambda0,
                                           double lambda1,
                                           double dt,
                                           double *u0,
                                           double *u1);

/**
 * Boundary-adjusted velocity `V(x, v)` in the scenario's domain.
 *
 * # Safety
 * `scenario` must be a live handle; `out` must point to 2 writable doubles.
 */
enum PedflowStatus pedflow_reflect_velocity(const struct PedflowScenario *scenario,
                                            double x,
                                            double y,
                                            double vx,
                                            double vy,
                                            double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PEDFLOW_H */
