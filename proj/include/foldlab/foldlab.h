/* SPDX-License-Identifier: Apache-2.0 */
#ifndef FOLDLAB_H
#define FOLDLAB_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

#if defined(_WIN32)
#define FL_API __declspec(dllexport)
#else
#define FL_API __attribute__((visibility("default")))
#endif

typedef enum fl_status {
  FL_OK = 0,
  FL_ERR_INVALID_ARGUMENT = 1,
  FL_ERR_PARSE = 2,
  FL_ERR_TOPOLOGY = 3,
  FL_ERR_DEGENERATE = 4,
  FL_ERR_IO = 5,
  FL_ERR_SOLVER = 6,
  FL_ERR_NOT_FOUND = 7,
  FL_ERR_CONFLICT = 8,
  FL_ERR_INTERNAL = 9
} fl_status;

typedef struct fl_scene fl_scene;
typedef struct fl_modes fl_modes;
typedef struct fl_trajectory fl_trajectory;
typedef struct fl_tiling fl_tiling;
typedef struct fl_inverse fl_inverse;
typedef struct fl_server fl_server;

/* Message of the last failed call on this thread ("" if none). */
FL_API const char* fl_last_error(void);
FL_API const char* fl_status_name(fl_status status);
FL_API const char* fl_version(void);

/* Strings are returned by copying into buf (capacity cap, always
 * NUL-terminated when cap > 0). *len receives the full length without the
 * terminator; pass buf = NULL to query it. */

/* ---- scenes ------------------------------------------------------------ */

/* Newline-separated built-in scene names. */
FL_API fl_status fl_scene_names(char* buf, size_t cap, size_t* len);
FL_API fl_status fl_scene_builtin(const char* name, fl_scene** out);
/* config_json may be NULL for defaults. */
FL_API fl_status fl_scene_load(const char* obj_path, const char* config_json, fl_scene** out);
FL_API fl_status fl_scene_from_arrays(const double* positions, int vertex_count, const int* triangles,
                                      int triangle_count, const char* config_json, fl_scene** out);
/* Replaces the configuration; the mesh is kept. */
FL_API fl_status fl_scene_set_config(fl_scene* scene, const char* config_json);
FL_API void fl_scene_free(fl_scene* scene);

FL_API int fl_scene_vertex_count(const fl_scene* scene);
FL_API int fl_scene_triangle_count(const fl_scene* scene);
FL_API int fl_scene_hinge_count(const fl_scene* scene);
FL_API int fl_scene_dofs(const fl_scene* scene);
FL_API fl_status fl_scene_positions(const fl_scene* scene, double* out);
FL_API fl_status fl_scene_triangles(const fl_scene* scene, int* out);
FL_API fl_status fl_scene_fingerprint(const fl_scene* scene, char* buf, size_t cap, size_t* len);
FL_API fl_status fl_scene_config_json(const fl_scene* scene, char* buf, size_t cap, size_t* len);
FL_API fl_status fl_scene_write_obj(const fl_scene* scene, const double* state, const char* path);
/* OBJ, config and manifest.json for every built-in scene. */
FL_API fl_status fl_export_assets(const char* dir);

typedef struct fl_energy_report {
  double total;
  double membrane;
  double bending;
  double penalty;
  double barrier;
  double max_strain;
  double mass_displacement;
} fl_energy_report;

/* Energy at rest angles; state NULL means the rest state. */
FL_API fl_status fl_scene_energy(const fl_scene* scene, const double* state, fl_energy_report* out);

/* ---- modes ------------------------------------------------------------- */

FL_API fl_status fl_modes_compute(const fl_scene* scene, int count, fl_modes** out);
FL_API fl_status fl_modes_load(const char* path, fl_modes** out);
FL_API fl_status fl_modes_save(const fl_modes* modes, int vertex_count, const char* path);
FL_API void fl_modes_free(fl_modes* modes);
FL_API int fl_modes_count(const fl_modes* modes);
FL_API int fl_modes_dimension(const fl_modes* modes);
FL_API double fl_modes_eigenvalue(const fl_modes* modes, int i);
FL_API fl_status fl_modes_vector(const fl_modes* modes, int i, double* out);
FL_API fl_status fl_modes_normal_fraction(const fl_scene* scene, const fl_modes* modes, int i, double* out);
FL_API fl_status fl_modes_rigid_fraction(const fl_scene* scene, const fl_modes* modes, int i, double* out);
/* Ascending indices of modes with rigid fraction < 1/2; *count receives the
 * total even if it exceeds cap. */
FL_API fl_status fl_modes_nonrigid(const fl_scene* scene, const fl_modes* modes, int* out, int cap, int* count);

/* ---- folding ----------------------------------------------------------- */

typedef struct fl_fold_options {
  double t_max; /* < 0: largest t keeping |kbar| <= 0.9 pi */
  int steps;
  double grad_tol; /* <= 0: scene configuration */
  int max_newton_iters; /* <= 0: scene configuration */
} fl_fold_options;

FL_API fl_fold_options fl_fold_options_default(void);

/* A solver failure mid-path returns FL_ERR_SOLVER and still hands out the
 * partial trajectory in *out (free it). */
FL_API fl_status fl_fold_mode(const fl_scene* scene, const fl_modes* modes, int mode, const fl_fold_options* options,
                              fl_trajectory** out);
FL_API fl_status fl_fold_blend(const fl_scene* scene, const fl_modes* modes, const int* indices,
                               const double* coefficients, int count, const fl_fold_options* options,
                               fl_trajectory** out);
FL_API fl_status fl_linear_mode(const fl_scene* scene, const fl_modes* modes, int mode, const double* t, int count,
                                fl_trajectory** out);
/* Linear-mode states at the mass displacements of reference's steps. */
FL_API fl_status fl_linear_mode_matched(const fl_scene* scene, const fl_modes* modes, int mode,
                                        const fl_trajectory* reference, fl_trajectory** out);
FL_API void fl_trajectory_free(fl_trajectory* trajectory);

typedef struct fl_step_info {
  double t;
  fl_energy_report report;
  double actuated_energy;
  int newton_iters;
  double wall_time_s;
} fl_step_info;

FL_API int fl_trajectory_steps(const fl_trajectory* trajectory);
FL_API int fl_trajectory_complete(const fl_trajectory* trajectory);
FL_API fl_status fl_trajectory_error(const fl_trajectory* trajectory, char* buf, size_t cap, size_t* len);
FL_API fl_status fl_trajectory_step(const fl_trajectory* trajectory, int step, fl_step_info* out);
FL_API fl_status fl_trajectory_state(const fl_trajectory* trajectory, int step, double* out);
FL_API fl_status fl_trajectory_csv(const fl_trajectory* trajectory, char* buf, size_t cap, size_t* len);
/* frame_%04d.obj, report.csv and meta.json; extra_json (object or NULL) is
 * merged into meta.json. */
FL_API fl_status fl_trajectory_write(const fl_scene* scene, const fl_trajectory* trajectory, const char* dir,
                                     const char* extra_json);

typedef struct fl_matched_comparison {
  double b;
  double t_lm;
  double t_ssm;
  fl_energy_report lm;
  fl_energy_report ssm;
} fl_matched_comparison;

/* LM vs strain-space state at the mass displacement where the LM strain
 * first exceeds threshold. */
FL_API fl_status fl_compare_at_strain(const fl_scene* scene, const fl_modes* modes, int mode, double threshold,
                                      fl_matched_comparison* out);

/* ---- periodic tilings ---------------------------------------------------- */

/* kind: "translation" or "reflection". Uses the scene's material and the
 * tiling's own pins. */
FL_API fl_status fl_tiling_create(const fl_scene* scene, const char* kind, fl_tiling** out);
FL_API void fl_tiling_free(fl_tiling* tiling);
FL_API int fl_tiling_dimension(const fl_tiling* tiling);
FL_API fl_status fl_tiling_modes(const fl_tiling* tiling, int count, fl_modes** out);
/* Expanded full-space displacement of reduced mode i (3n entries). */
FL_API fl_status fl_tiling_expand_mode(const fl_tiling* tiling, const fl_modes* modes, int i, double* out);
FL_API fl_status fl_tiling_nonrigid(const fl_tiling* tiling, const fl_modes* modes, int* out, int cap, int* count);
FL_API fl_status fl_tiling_fold(const fl_tiling* tiling, const fl_modes* modes, int mode, const fl_fold_options* options,
                                fl_trajectory** out);
FL_API fl_status fl_tiling_periodicity_error(const fl_tiling* tiling, const double* state, double* out);
/* Period vectors (T_x then T_y, 6 numbers) of a state. */
FL_API fl_status fl_tiling_periods(const fl_tiling* tiling, const double* state, double* out);
/* Writes the nx by ny tiling of state as OBJ; counts may be NULL. */
FL_API fl_status fl_tiling_export(const fl_tiling* tiling, const double* state, int nx, int ny, const char* obj_path,
                                  int* vertex_count, int* triangle_count);

/* ---- inverse design ------------------------------------------------------ */

typedef struct fl_inverse_options {
  double center[3];
  double radius;
  int modes;     /* number of non-rigid modes used */
  int max_iters; /* outer iterations */
  double regularization;
} fl_inverse_options;

typedef struct fl_inverse_iterate {
  int iteration;
  double objective;
  double grad_norm;
  double step_norm;
  int solves;
  double wall_time_s;
} fl_inverse_iterate;

FL_API fl_inverse_options fl_inverse_options_default(void);
/* modes must hold at least options->modes non-rigid modes. */
FL_API fl_status fl_inverse_sphere(const fl_scene* scene, const fl_modes* modes, const fl_inverse_options* options,
                                   fl_inverse** out);
FL_API void fl_inverse_free(fl_inverse* result);
FL_API int fl_inverse_mode_count(const fl_inverse* result);
FL_API fl_status fl_inverse_mode_indices(const fl_inverse* result, int* out);
FL_API fl_status fl_inverse_coefficients(const fl_inverse* result, double* out);
FL_API fl_status fl_inverse_state(const fl_inverse* result, double* out);
FL_API int fl_inverse_iterations(const fl_inverse* result);
FL_API fl_status fl_inverse_iterate_at(const fl_inverse* result, int i, fl_inverse_iterate* out);
FL_API fl_status fl_inverse_stop_reason(const fl_inverse* result, char* buf, size_t cap, size_t* len);
/* Largest vertex distance outside the sphere (m); negative when inside. */
FL_API double fl_inverse_excess(const fl_inverse* result);

/* ---- timing -------------------------------------------------------------- */

typedef struct fl_bench_row {
  int vertices;
  int triangles;
  int modes;
  int states;
  int failed_states;
  double mean_state_s;
  double max_state_s;
  double modes_s;
} fl_bench_row;

FL_API fl_status fl_bench(const fl_scene* scene, int first_mode, int last_mode, int states, double step, int threads,
                          fl_bench_row* out);

/* ---- design service ------------------------------------------------------ */

/* port 0 picks a free port; workers <= 0 uses FOLDLAB_THREADS or the core count. */
FL_API fl_status fl_server_start(const char* host, int port, int workers, fl_server** out);
FL_API int fl_server_port(const fl_server* server);
/* Stops and frees the server. */
FL_API void fl_server_stop(fl_server* server);

/* Worker count honoring FOLDLAB_THREADS. */
FL_API int fl_thread_cap(void);

#ifdef __cplusplus
}
#endif

#endif
