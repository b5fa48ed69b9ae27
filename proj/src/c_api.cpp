// SPDX-License-Identifier: Apache-2.0
#include "foldlab/foldlab.h"

#include <cstring>
#include <memory>
#include <string>

#include "foldlab/config.hpp"
#include "foldlab/error.hpp"
#include "foldlab/inverse.hpp"
#include "foldlab/parallel.hpp"
#include "foldlab/periodic.hpp"
#include "foldlab/report.hpp"
#include "foldlab/service.hpp"

using namespace foldlab;

struct fl_scene {
  std::string name;
  std::shared_ptr<const TriMesh> mesh;
  Config config;
  std::unique_ptr<ShellModel> model;

  void rebuild() { model = std::make_unique<ShellModel>(build_model(mesh, config)); }
};

struct fl_modes {
  ModeSet modes;
};

struct fl_trajectory {
  Trajectory trajectory;
};

struct fl_tiling {
  std::shared_ptr<const TriMesh> mesh;
  PeriodicReduction reduction;
  std::unique_ptr<ShellModel> model;
  SolverConfig solver;
};

struct fl_inverse {
  InverseResult result;
  std::vector<int> indices;
  Sphere sphere;
};

struct fl_server {
  std::unique_ptr<DesignService> service;
};

namespace {

thread_local std::string last_error;

fl_status status_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument:
      return FL_ERR_INVALID_ARGUMENT;
    case ErrorCode::Parse:
      return FL_ERR_PARSE;
    case ErrorCode::Topology:
      return FL_ERR_TOPOLOGY;
    case ErrorCode::DegenerateElement:
      return FL_ERR_DEGENERATE;
    case ErrorCode::Io:
      return FL_ERR_IO;
    case ErrorCode::Solver:
      return FL_ERR_SOLVER;
    case ErrorCode::NotFound:
      return FL_ERR_NOT_FOUND;
    case ErrorCode::Conflict:
      return FL_ERR_CONFLICT;
    case ErrorCode::Internal:
      return FL_ERR_INTERNAL;
  }
  return FL_ERR_INTERNAL;
}

template <class F>
fl_status guard(F&& f) {
  try {
    last_error.clear();
    return f();
  } catch (const Error& e) {
    last_error = e.what();
    return status_of(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return FL_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return FL_ERR_INTERNAL;
  }
}

void require(bool ok, const char* what) {
  if (!ok) fail(ErrorCode::InvalidArgument, what);
}

fl_status copy_string(const std::string& s, char* buf, size_t cap, size_t* len) {
  if (len) *len = s.size();
  if (buf && cap > 0) {
    const size_t n = std::min(cap - 1, s.size());
    std::memcpy(buf, s.data(), n);
    buf[n] = '\0';
  }
  return FL_OK;
}

void fill(fl_energy_report* out, const EnergyReport& r) {
  out->total = r.total;
  out->membrane = r.membrane;
  out->bending = r.bending;
  out->penalty = r.penalty;
  out->barrier = r.barrier;
  out->max_strain = r.max_inplane_strain;
  out->mass_displacement = r.mass_displacement;
}

FoldOptions fold_options(const fl_fold_options* o, const SolverConfig& base) {
  FoldOptions fo;
  fo.solver = base;
  if (!o) return fo;
  fo.t_max = o->t_max;
  fo.steps = o->steps;
  if (o->grad_tol > 0) fo.solver.grad_tol = o->grad_tol;
  if (o->max_newton_iters > 0) fo.solver.max_newton_iters = o->max_newton_iters;
  return fo;
}

State state_or_rest(const TriMesh& mesh, const double* state) {
  if (!state) return mesh.rest_state();
  return Eigen::Map<const Eigen::VectorXd>(state, 3 * mesh.vertex_count());
}

fl_status trajectory_out(Trajectory tr, fl_trajectory** out) {
  const bool complete = tr.complete();
  const std::string error = tr.error;
  *out = new fl_trajectory{std::move(tr)};
  if (!complete) {
    last_error = error;
    return FL_ERR_SOLVER;
  }
  return FL_OK;
}

}  // namespace

extern "C" {

const char* fl_last_error(void) { return last_error.c_str(); }

const char* fl_status_name(fl_status status) {
  switch (status) {
    case FL_OK:
      return "ok";
    case FL_ERR_INVALID_ARGUMENT:
      return "invalid_argument";
    case FL_ERR_PARSE:
      return "parse";
    case FL_ERR_TOPOLOGY:
      return "topology";
    case FL_ERR_DEGENERATE:
      return "degenerate_element";
    case FL_ERR_IO:
      return "io";
    case FL_ERR_SOLVER:
      return "solver";
    case FL_ERR_NOT_FOUND:
      return "not_found";
    case FL_ERR_CONFLICT:
      return "conflict";
    case FL_ERR_INTERNAL:
      return "internal";
  }
  return "unknown";
}

const char* fl_version(void) { return "0.1.0"; }

int fl_thread_cap(void) { return thread_cap(); }

// ---- scenes ----------------------------------------------------------------

fl_status fl_scene_names(char* buf, size_t cap, size_t* len) {
  return guard([&] {
    std::string s;
    for (const auto& n : scene_names()) s += n + "\n";
    return copy_string(s, buf, cap, len);
  });
}

fl_status fl_scene_builtin(const char* name, fl_scene** out) {
  return guard([&] {
    require(name && out, "name and out must not be null");
    Scene s = make_scene(name);
    auto scene = std::make_unique<fl_scene>();
    scene->name = s.name;
    scene->mesh = s.mesh;
    scene->config = s.config;
    scene->rebuild();
    *out = scene.release();
    return FL_OK;
  });
}

fl_status fl_scene_load(const char* obj_path, const char* config_json, fl_scene** out) {
  return guard([&] {
    require(obj_path && out, "path and out must not be null");
    auto scene = std::make_unique<fl_scene>();
    scene->name = obj_path;
    scene->mesh = std::make_shared<const TriMesh>(load_obj(obj_path));
    if (config_json) scene->config = parse_config(config_json);
    scene->rebuild();
    *out = scene.release();
    return FL_OK;
  });
}

fl_status fl_scene_from_arrays(const double* positions, int vertex_count, const int* triangles, int triangle_count,
                               const char* config_json, fl_scene** out) {
  return guard([&] {
    require(positions && triangles && out, "arrays and out must not be null");
    require(vertex_count > 0 && triangle_count > 0, "mesh needs vertices and triangles");
    std::vector<Eigen::Vector3d> V(vertex_count);
    for (int v = 0; v < vertex_count; ++v) V[v] = Eigen::Vector3d(positions[3 * v], positions[3 * v + 1], positions[3 * v + 2]);
    std::vector<std::array<int, 3>> T(triangle_count);
    for (int t = 0; t < triangle_count; ++t) T[t] = {triangles[3 * t], triangles[3 * t + 1], triangles[3 * t + 2]};
    auto scene = std::make_unique<fl_scene>();
    scene->name = "arrays";
    scene->mesh = std::make_shared<const TriMesh>(std::move(V), std::move(T));
    if (config_json) scene->config = parse_config(config_json);
    scene->rebuild();
    *out = scene.release();
    return FL_OK;
  });
}

fl_status fl_scene_set_config(fl_scene* scene, const char* config_json) {
  return guard([&] {
    require(scene && config_json, "scene and config must not be null");
    Config c = parse_config(config_json);
    auto model = std::make_unique<ShellModel>(build_model(scene->mesh, c));
    scene->config = std::move(c);
    scene->model = std::move(model);
    return FL_OK;
  });
}

void fl_scene_free(fl_scene* scene) { delete scene; }

int fl_scene_vertex_count(const fl_scene* scene) { return scene ? scene->mesh->vertex_count() : 0; }
int fl_scene_triangle_count(const fl_scene* scene) { return scene ? scene->mesh->triangle_count() : 0; }
int fl_scene_hinge_count(const fl_scene* scene) { return scene ? scene->mesh->hinge_count() : 0; }
int fl_scene_dofs(const fl_scene* scene) { return scene ? scene->model->dofs() : 0; }

fl_status fl_scene_positions(const fl_scene* scene, double* out) {
  return guard([&] {
    require(scene && out, "scene and out must not be null");
    const State x = scene->mesh->rest_state();
    std::copy(x.data(), x.data() + x.size(), out);
    return FL_OK;
  });
}

fl_status fl_scene_triangles(const fl_scene* scene, int* out) {
  return guard([&] {
    require(scene && out, "scene and out must not be null");
    for (const auto& t : scene->mesh->triangles()) out = std::copy(t.begin(), t.end(), out);
    return FL_OK;
  });
}

fl_status fl_scene_fingerprint(const fl_scene* scene, char* buf, size_t cap, size_t* len) {
  return guard([&] {
    require(scene != nullptr, "scene must not be null");
    return copy_string(scene->model->fingerprint(), buf, cap, len);
  });
}

fl_status fl_scene_config_json(const fl_scene* scene, char* buf, size_t cap, size_t* len) {
  return guard([&] {
    require(scene != nullptr, "scene must not be null");
    return copy_string(config_to_json(scene->config), buf, cap, len);
  });
}

fl_status fl_scene_write_obj(const fl_scene* scene, const double* state, const char* path) {
  return guard([&] {
    require(scene && path, "scene and path must not be null");
    write_obj_frame(*scene->mesh, state_or_rest(*scene->mesh, state), path);
    return FL_OK;
  });
}

fl_status fl_export_assets(const char* dir) {
  return guard([&] {
    require(dir != nullptr, "dir must not be null");
    export_scene_assets(dir);
    return FL_OK;
  });
}

fl_status fl_scene_energy(const fl_scene* scene, const double* state, fl_energy_report* out) {
  return guard([&] {
    require(scene && out, "scene and out must not be null");
    fill(out, scene->model->energy(scene->mesh->rest_angles(), state_or_rest(*scene->mesh, state)));
    return FL_OK;
  });
}

// ---- modes -----------------------------------------------------------------

fl_status fl_modes_compute(const fl_scene* scene, int count, fl_modes** out) {
  return guard([&] {
    require(scene && out, "scene and out must not be null");
    require(count >= 0, "mode count must be non-negative");
    if (count > scene->model->dofs()) {
      fail(ErrorCode::InvalidArgument, "requested " + std::to_string(count) + " modes but the model has " +
                                           std::to_string(scene->model->dofs()) + " degrees of freedom");
    }
    auto m = std::make_unique<fl_modes>();
    if (count > 0) {
      m->modes = rest_modes(*scene->model, count);
    } else {
      m->modes.vectors.resize(scene->model->dofs(), 0);
    }
    *out = m.release();
    return FL_OK;
  });
}

fl_status fl_modes_load(const char* path, fl_modes** out) {
  return guard([&] {
    require(path && out, "path and out must not be null");
    *out = new fl_modes{load_modes(path)};
    return FL_OK;
  });
}

fl_status fl_modes_save(const fl_modes* modes, int vertex_count, const char* path) {
  return guard([&] {
    require(modes && path, "modes and path must not be null");
    save_modes(modes->modes, vertex_count, path);
    return FL_OK;
  });
}

void fl_modes_free(fl_modes* modes) { delete modes; }
int fl_modes_count(const fl_modes* modes) { return modes ? modes->modes.size() : 0; }
int fl_modes_dimension(const fl_modes* modes) { return modes ? static_cast<int>(modes->modes.vectors.rows()) : 0; }

double fl_modes_eigenvalue(const fl_modes* modes, int i) {
  if (!modes || i < 0 || i >= modes->modes.size()) return NAN;
  return modes->modes.eigenvalues[i];
}

fl_status fl_modes_vector(const fl_modes* modes, int i, double* out) {
  return guard([&] {
    require(modes && out, "modes and out must not be null");
    const Eigen::VectorXd v = modes->modes.mode(i);
    std::copy(v.data(), v.data() + v.size(), out);
    return FL_OK;
  });
}

fl_status fl_modes_normal_fraction(const fl_scene* scene, const fl_modes* modes, int i, double* out) {
  return guard([&] {
    require(scene && modes && out, "arguments must not be null");
    *out = normal_fraction(*scene->mesh, scene->model->mass(), modes->modes.mode(i));
    return FL_OK;
  });
}

fl_status fl_modes_rigid_fraction(const fl_scene* scene, const fl_modes* modes, int i, double* out) {
  return guard([&] {
    require(scene && modes && out, "arguments must not be null");
    *out = rigid_fraction(*scene->mesh, scene->model->mass(), modes->modes.mode(i));
    return FL_OK;
  });
}

fl_status fl_modes_nonrigid(const fl_scene* scene, const fl_modes* modes, int* out, int cap, int* count) {
  return guard([&] {
    require(scene && modes, "scene and modes must not be null");
    const auto idx = nonrigid_modes(*scene->mesh, scene->model->mass(), modes->modes);
    if (count) *count = static_cast<int>(idx.size());
    for (int k = 0; out && k < cap && k < static_cast<int>(idx.size()); ++k) out[k] = idx[k];
    return FL_OK;
  });
}

// ---- folding ---------------------------------------------------------------

fl_fold_options fl_fold_options_default(void) { return fl_fold_options{-1.0, 10, 0.0, 0}; }

fl_status fl_fold_mode(const fl_scene* scene, const fl_modes* modes, int mode, const fl_fold_options* options,
                       fl_trajectory** out) {
  return guard([&] {
    require(scene && modes && out, "arguments must not be null");
    require(mode >= 0 && mode < modes->modes.size(), "mode index out of range");
    return trajectory_out(fold_mode(*scene->model, modes->modes, mode, fold_options(options, scene->config.solver)), out);
  });
}

fl_status fl_fold_blend(const fl_scene* scene, const fl_modes* modes, const int* indices, const double* coefficients,
                        int count, const fl_fold_options* options, fl_trajectory** out) {
  return guard([&] {
    require(scene && modes && indices && coefficients && out, "arguments must not be null");
    require(count > 0, "blend needs at least one mode");
    std::vector<int> idx(indices, indices + count);
    for (int i : idx) require(i >= 0 && i < modes->modes.size(), "mode index out of range");
    std::vector<double> c(coefficients, coefficients + count);
    return trajectory_out(fold_blend(*scene->model, modes->modes, idx, c, fold_options(options, scene->config.solver)), out);
  });
}

fl_status fl_linear_mode(const fl_scene* scene, const fl_modes* modes, int mode, const double* t, int count,
                         fl_trajectory** out) {
  return guard([&] {
    require(scene && modes && t && out, "arguments must not be null");
    require(mode >= 0 && mode < modes->modes.size(), "mode index out of range");
    return trajectory_out(linear_mode_trajectory(*scene->model, modes->modes, mode, std::vector<double>(t, t + count)), out);
  });
}

fl_status fl_linear_mode_matched(const fl_scene* scene, const fl_modes* modes, int mode, const fl_trajectory* reference,
                                 fl_trajectory** out) {
  return guard([&] {
    require(scene && modes && reference && out, "arguments must not be null");
    require(mode >= 0 && mode < modes->modes.size(), "mode index out of range");
    return trajectory_out(lm_baseline_matched(*scene->model, modes->modes, mode, reference->trajectory), out);
  });
}

void fl_trajectory_free(fl_trajectory* trajectory) { delete trajectory; }

int fl_trajectory_steps(const fl_trajectory* trajectory) {
  return trajectory ? static_cast<int>(trajectory->trajectory.steps.size()) : 0;
}

int fl_trajectory_complete(const fl_trajectory* trajectory) { return trajectory && trajectory->trajectory.complete(); }

fl_status fl_trajectory_error(const fl_trajectory* trajectory, char* buf, size_t cap, size_t* len) {
  return guard([&] {
    require(trajectory != nullptr, "trajectory must not be null");
    return copy_string(trajectory->trajectory.error, buf, cap, len);
  });
}

fl_status fl_trajectory_step(const fl_trajectory* trajectory, int step, fl_step_info* out) {
  return guard([&] {
    require(trajectory && out, "arguments must not be null");
    const auto& steps = trajectory->trajectory.steps;
    require(step >= 0 && step < static_cast<int>(steps.size()), "step index out of range");
    const auto& s = steps[step];
    out->t = s.t;
    fill(&out->report, s.report);
    out->actuated_energy = s.actuated_energy;
    out->newton_iters = s.stats.iterations;
    out->wall_time_s = s.stats.wall_time_s;
    return FL_OK;
  });
}

fl_status fl_trajectory_state(const fl_trajectory* trajectory, int step, double* out) {
  return guard([&] {
    require(trajectory && out, "arguments must not be null");
    const auto& steps = trajectory->trajectory.steps;
    require(step >= 0 && step < static_cast<int>(steps.size()), "step index out of range");
    const State& x = steps[step].x;
    std::copy(x.data(), x.data() + x.size(), out);
    return FL_OK;
  });
}

fl_status fl_trajectory_csv(const fl_trajectory* trajectory, char* buf, size_t cap, size_t* len) {
  return guard([&] {
    require(trajectory != nullptr, "trajectory must not be null");
    return copy_string(trajectory_csv(trajectory->trajectory), buf, cap, len);
  });
}

fl_status fl_trajectory_write(const fl_scene* scene, const fl_trajectory* trajectory, const char* dir,
                              const char* extra_json) {
  return guard([&] {
    require(scene && trajectory && dir, "arguments must not be null");
    write_trajectory(*scene->mesh, trajectory->trajectory, dir, extra_json ? extra_json : "{}");
    return FL_OK;
  });
}

fl_status fl_compare_at_strain(const fl_scene* scene, const fl_modes* modes, int mode, double threshold,
                               fl_matched_comparison* out) {
  return guard([&] {
    require(scene && modes && out, "arguments must not be null");
    require(mode >= 0 && mode < modes->modes.size(), "mode index out of range");
    require(threshold > 0, "strain threshold must be positive");
    const MatchedComparison c = compare_at_strain(*scene->model, modes->modes, mode, threshold, scene->config.solver);
    if (!c.found) fail(ErrorCode::Solver, c.error);
    out->b = c.b;
    out->t_lm = c.t_lm;
    out->t_ssm = c.t_ssm;
    fill(&out->lm, c.lm);
    fill(&out->ssm, c.ssm);
    return FL_OK;
  });
}

// ---- periodic tilings --------------------------------------------------------

fl_status fl_tiling_create(const fl_scene* scene, const char* kind, fl_tiling** out) {
  return guard([&] {
    require(scene && kind && out, "arguments must not be null");
    const TilingKind k = parse_tiling_kind(kind);
    auto t = std::make_unique<fl_tiling>();
    t->mesh = scene->mesh;
    t->reduction = build_reduction(*scene->mesh, k);
    PenaltySet pen = penalties_for(*scene->mesh, scene->config);
    pen.pins = periodic_pins(*scene->mesh, k, scene->config.default_penalty_weight());
    t->model = std::make_unique<ShellModel>(scene->mesh, material_for(*scene->mesh, scene->config), std::move(pen));
    t->solver = scene->config.solver;
    *out = t.release();
    return FL_OK;
  });
}

void fl_tiling_free(fl_tiling* tiling) { delete tiling; }
int fl_tiling_dimension(const fl_tiling* tiling) { return tiling ? tiling->reduction.dimension() : 0; }

fl_status fl_tiling_modes(const fl_tiling* tiling, int count, fl_modes** out) {
  return guard([&] {
    require(tiling && out, "arguments must not be null");
    auto m = std::make_unique<fl_modes>();
    if (count > 0) {
      m->modes = periodic_modes(tiling->reduction, *tiling->model, count);
    } else {
      require(count == 0, "mode count must be non-negative");
      m->modes.vectors.resize(tiling->reduction.dimension(), 0);
    }
    *out = m.release();
    return FL_OK;
  });
}

fl_status fl_tiling_expand_mode(const fl_tiling* tiling, const fl_modes* modes, int i, double* out) {
  return guard([&] {
    require(tiling && modes && out, "arguments must not be null");
    const Eigen::VectorXd e = expand_mode(tiling->reduction, modes->modes, i);
    std::copy(e.data(), e.data() + e.size(), out);
    return FL_OK;
  });
}

fl_status fl_tiling_nonrigid(const fl_tiling* tiling, const fl_modes* modes, int* out, int cap, int* count) {
  return guard([&] {
    require(tiling && modes, "arguments must not be null");
    ModeSet full;
    full.eigenvalues = modes->modes.eigenvalues;
    full.vectors = tiling->reduction.map.P * modes->modes.vectors;
    const auto idx = nonrigid_modes(*tiling->mesh, tiling->model->mass(), full);
    if (count) *count = static_cast<int>(idx.size());
    for (int k = 0; out && k < cap && k < static_cast<int>(idx.size()); ++k) out[k] = idx[k];
    return FL_OK;
  });
}

fl_status fl_tiling_fold(const fl_tiling* tiling, const fl_modes* modes, int mode, const fl_fold_options* options,
                         fl_trajectory** out) {
  return guard([&] {
    require(tiling && modes && out, "arguments must not be null");
    require(mode >= 0 && mode < modes->modes.size(), "mode index out of range");
    return trajectory_out(
        fold_periodic(*tiling->model, tiling->reduction, modes->modes, mode, fold_options(options, tiling->solver)), out);
  });
}

fl_status fl_tiling_periodicity_error(const fl_tiling* tiling, const double* state, double* out) {
  return guard([&] {
    require(tiling && out, "arguments must not be null");
    *out = periodicity_error(tiling->reduction, state_or_rest(*tiling->mesh, state));
    return FL_OK;
  });
}

fl_status fl_tiling_periods(const fl_tiling* tiling, const double* state, double* out) {
  return guard([&] {
    require(tiling && out, "arguments must not be null");
    const auto T = tiling->reduction.periods(state_or_rest(*tiling->mesh, state));
    for (int c = 0; c < 3; ++c) {
      out[c] = T[0][c];
      out[3 + c] = T[1][c];
    }
    return FL_OK;
  });
}

fl_status fl_tiling_export(const fl_tiling* tiling, const double* state, int nx, int ny, const char* obj_path,
                           int* vertex_count, int* triangle_count) {
  return guard([&] {
    require(tiling && obj_path, "arguments must not be null");
    const TriMesh tiled = export_tiling(*tiling->mesh, tiling->reduction, state_or_rest(*tiling->mesh, state), nx, ny);
    write_obj_frame(tiled, tiled.rest_state(), obj_path);
    if (vertex_count) *vertex_count = tiled.vertex_count();
    if (triangle_count) *triangle_count = tiled.triangle_count();
    return FL_OK;
  });
}

// ---- inverse design ----------------------------------------------------------

fl_inverse_options fl_inverse_options_default(void) {
  fl_inverse_options o{};
  o.center[0] = o.center[1] = 0.0;
  o.center[2] = 0.03;
  o.radius = 0.06;
  o.modes = 50;
  o.max_iters = 200;
  o.regularization = 0.0;
  return o;
}

fl_status fl_inverse_sphere(const fl_scene* scene, const fl_modes* modes, const fl_inverse_options* options,
                            fl_inverse** out) {
  return guard([&] {
    require(scene && modes && options && out, "arguments must not be null");
    require(options->modes > 0, "inverse design needs at least one mode");
    require(options->radius > 0, "sphere radius must be positive");
    const auto nonrigid = nonrigid_modes(*scene->mesh, scene->model->mass(), modes->modes);
    if (static_cast<int>(nonrigid.size()) < options->modes) {
      fail(ErrorCode::InvalidArgument, "mode set has only " + std::to_string(nonrigid.size()) + " non-rigid modes");
    }
    auto res = std::make_unique<fl_inverse>();
    res->indices.assign(nonrigid.begin(), nonrigid.begin() + options->modes);
    res->sphere = Sphere{Eigen::Vector3d(options->center[0], options->center[1], options->center[2]), options->radius};
    const SubspaceProblem problem(*scene->model, modes->modes, res->indices, sphere_design_objective(res->sphere),
                                  scene->config.solver);
    InverseOptions io;
    io.max_iters = options->max_iters;
    io.regularization = options->regularization;
    res->result = optimize_design(problem, io);
    *out = res.release();
    return FL_OK;
  });
}

void fl_inverse_free(fl_inverse* result) { delete result; }
int fl_inverse_mode_count(const fl_inverse* result) { return result ? static_cast<int>(result->indices.size()) : 0; }

fl_status fl_inverse_mode_indices(const fl_inverse* result, int* out) {
  return guard([&] {
    require(result && out, "arguments must not be null");
    std::copy(result->indices.begin(), result->indices.end(), out);
    return FL_OK;
  });
}

fl_status fl_inverse_coefficients(const fl_inverse* result, double* out) {
  return guard([&] {
    require(result && out, "arguments must not be null");
    const auto& c = result->result.c;
    std::copy(c.data(), c.data() + c.size(), out);
    return FL_OK;
  });
}

fl_status fl_inverse_state(const fl_inverse* result, double* out) {
  return guard([&] {
    require(result && out, "arguments must not be null");
    const auto& x = result->result.x;
    std::copy(x.data(), x.data() + x.size(), out);
    return FL_OK;
  });
}

int fl_inverse_iterations(const fl_inverse* result) {
  return result ? static_cast<int>(result->result.history.size()) : 0;
}

fl_status fl_inverse_iterate_at(const fl_inverse* result, int i, fl_inverse_iterate* out) {
  return guard([&] {
    require(result && out, "arguments must not be null");
    const auto& h = result->result.history;
    require(i >= 0 && i < static_cast<int>(h.size()), "iterate index out of range");
    *out = fl_inverse_iterate{h[i].iteration, h[i].objective, h[i].grad_norm, h[i].step_norm, h[i].solves, h[i].wall_time_s};
    return FL_OK;
  });
}

fl_status fl_inverse_stop_reason(const fl_inverse* result, char* buf, size_t cap, size_t* len) {
  return guard([&] {
    require(result != nullptr, "result must not be null");
    return copy_string(result->result.stop_reason, buf, cap, len);
  });
}

double fl_inverse_excess(const fl_inverse* result) {
  return result ? sphere_excess(result->result.x, result->sphere) : NAN;
}

// ---- timing ------------------------------------------------------------------

fl_status fl_bench(const fl_scene* scene, int first_mode, int last_mode, int states, double step, int threads,
                   fl_bench_row* out) {
  return guard([&] {
    require(scene && out, "arguments must not be null");
    Scene s{scene->name, "", scene->mesh, scene->config};
    BenchOptions o;
    o.first_mode = first_mode;
    o.last_mode = last_mode;
    o.states = states;
    o.step = step;
    o.threads = threads > 0 ? threads : 1;
    const BenchRow r = bench_scene(s, o);
    *out = fl_bench_row{r.vertices, r.triangles, r.modes, r.states, r.failed_states, r.mean_state_s, r.max_state_s, r.modes_s};
    return FL_OK;
  });
}

// ---- design service ----------------------------------------------------------

fl_status fl_server_start(const char* host, int port, int workers, fl_server** out) {
  return guard([&] {
    require(out != nullptr, "out must not be null");
    require(port >= 0 && port <= 65535, "port out of range");
    ServiceOptions o;
    if (host) o.host = host;
    o.port = port;
    o.workers = workers;
    auto s = std::make_unique<fl_server>();
    s->service = std::make_unique<DesignService>(o);
    s->service->start();
    *out = s.release();
    return FL_OK;
  });
}

int fl_server_port(const fl_server* server) { return server ? server->service->port() : 0; }

void fl_server_stop(fl_server* server) {
  if (!server) return;
  server->service->stop();
  delete server;
}

}  // extern "C"
