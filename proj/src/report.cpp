// SPDX-License-Identifier: Apache-2.0
#include "foldlab/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include <json.hpp>

#include "foldlab/error.hpp"
#include "foldlab/parallel.hpp"

namespace foldlab {

namespace {

using nlohmann::json;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

std::string g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

std::string trajectory_csv(const Trajectory& trajectory) {
  std::string out = std::string(kReportColumns) + "\n";
  for (std::size_t s = 0; s < trajectory.steps.size(); ++s) {
    const auto& st = trajectory.steps[s];
    const auto& r = st.report;
    out += std::to_string(s) + "," + g17(st.t) + "," + g17(r.mass_displacement) + "," + g17(r.total) + "," +
           g17(r.membrane) + "," + g17(r.bending) + "," + g17(r.penalty) + "," + g17(r.barrier) + "," +
           g17(r.max_inplane_strain) + "," + std::to_string(st.stats.iterations) + "," + g17(st.stats.wall_time_s) + "\n";
  }
  return out;
}

std::string trajectory_meta(const Trajectory& trajectory, const std::string& extra_json) {
  json meta;
  meta["format"] = "foldlab-trajectory";
  meta["version"] = 1;
  meta["kind"] = trajectory.kind;
  meta["mode_indices"] = trajectory.mode_indices;
  meta["coefficients"] = trajectory.coefficients;
  meta["fingerprint"] = trajectory.fingerprint;
  meta["complete"] = trajectory.complete();
  meta["error"] = trajectory.error;
  meta["steps"] = trajectory.steps.size();
  json t = json::array(), actuated = json::array(), status = json::array();
  for (const auto& s : trajectory.steps) {
    t.push_back(s.t);
    actuated.push_back(s.actuated_energy);
    status.push_back(to_string(s.stats.status));
  }
  meta["t"] = t;
  meta["actuated_energy_J"] = actuated;
  meta["solver_status"] = status;
  json extra;
  try {
    extra = json::parse(extra_json);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::InvalidArgument, std::string("extra metadata is not JSON: ") + e.what());
  }
  if (!extra.is_object()) fail(ErrorCode::InvalidArgument, "extra metadata must be a JSON object");
  for (const auto& [k, v] : extra.items()) meta[k] = v;
  return meta.dump(2) + "\n";
}

void write_trajectory(const TriMesh& mesh, const Trajectory& trajectory, const std::filesystem::path& dir,
                      const std::string& extra_json) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  const std::string meta = trajectory_meta(trajectory, extra_json);
  for (std::size_t s = 0; s < trajectory.steps.size(); ++s) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04zu.obj", s);
    write_obj_frame(mesh, trajectory.steps[s].x, dir / name);
  }
  write_text(dir / "report.csv", trajectory_csv(trajectory));
  write_text(dir / "meta.json", meta);
}

double mode_mass_norm(const ShellModel& model, const ModeSet& modes, int i) {
  const Eigen::VectorXd e = modes.mode(i);
  if (e.size() != model.dofs()) fail(ErrorCode::InvalidArgument, "mode set does not match the model");
  return std::sqrt(e.dot(model.mass().cwiseProduct(e)));
}

Trajectory lm_baseline_matched(const ShellModel& model, const ModeSet& modes, int i, const Trajectory& reference) {
  const double norm = mode_mass_norm(model, modes, i);
  std::vector<double> grid;
  for (const auto& s : reference.steps) grid.push_back(std::sqrt(2.0) * s.report.mass_displacement / norm);
  return linear_mode_trajectory(model, modes, i, grid);
}

MatchedComparison compare_at_strain(const ShellModel& model, const ModeSet& modes, int i, double strain_threshold,
                                    const SolverConfig& solver) {
  MatchedComparison out;
  const TriMesh& mesh = model.mesh();
  const State X = mesh.rest_state();
  const CurvatureVector rest = mesh.rest_angles();
  const Eigen::VectorXd e = modes.mode(i);
  if (e.size() != model.dofs()) fail(ErrorCode::InvalidArgument, "mode set does not match the model");
  const auto lm_strain = [&](double t) { return max_inplane_strain(mesh, X + t * e); };

  // Bracket the first crossing on a geometric grid, then bisect.
  double lo = 0.0, hi = 1e-4 * mesh.diagonal() / e.lpNorm<Eigen::Infinity>();
  int grow = 0;
  while (lm_strain(hi) <= strain_threshold) {
    lo = hi;
    hi *= 1.25;
    if (++grow > 400) {
      out.error = "linear mode never reaches the strain threshold";
      return out;
    }
  }
  for (int k = 0; k < 100 && hi - lo > 1e-14 * hi; ++k) {
    const double mid = 0.5 * (lo + hi);
    (lm_strain(mid) > strain_threshold ? hi : lo) = mid;
  }
  out.t_lm = hi;
  out.lm = model.energy(rest, X + hi * e);
  out.b = out.lm.mass_displacement;

  const SparseMatrix J = curvature_jacobian(mesh, X);
  const StrainPath path = strain_path(J, rest, modes, {i}, {1.0});
  const double t_max = path.default_t_max(kDefaultAngleLimit);
  const auto solve = [&](double t, const State& warm, State* x) {
    const ShellObjective obj(model, path.at(t));
    SolveResult r = minimize(obj, warm, solver);
    if (!r.converged()) return false;
    *x = std::move(r.x);
    return true;
  };
  const auto b_of = [&](const State& x) { return mass_displacement(model.mass(), X, x); };

  const int grid = 400;
  State x_lo = X, x_hi;
  double t_lo = 0.0, t_hi = 0.0;
  bool bracketed = false;
  for (int k = 1; k <= grid; ++k) {
    t_hi = t_max * k / grid;
    if (!solve(t_hi, x_lo, &x_hi)) {
      out.error = "strain-space solve failed at t = " + std::to_string(t_hi);
      return out;
    }
    if (b_of(x_hi) >= out.b) {
      bracketed = true;
      break;
    }
    t_lo = t_hi;
    x_lo = x_hi;
  }
  if (!bracketed) {
    out.error = "strain-space path ends before reaching the matched displacement";
    return out;
  }
  for (int k = 0; k < 60; ++k) {
    const double b_hi = b_of(x_hi);
    if (std::abs(b_hi - out.b) <= 1e-9 * out.b) break;
    const double mid = 0.5 * (t_lo + t_hi);
    State x_mid;
    if (!solve(mid, x_lo, &x_mid)) {
      out.error = "strain-space solve failed at t = " + std::to_string(mid);
      return out;
    }
    if (b_of(x_mid) >= out.b) {
      t_hi = mid;
      x_hi = std::move(x_mid);
    } else {
      t_lo = mid;
      x_lo = std::move(x_mid);
    }
  }
  out.t_ssm = t_hi;
  out.ssm = model.energy(rest, x_hi);
  out.found = true;
  return out;
}

BenchRow bench_scene(const Scene& scene, const BenchOptions& options) {
  if (options.first_mode < 6 || options.last_mode < options.first_mode || options.states < 1 || !(options.step > 0)) {
    fail(ErrorCode::InvalidArgument, "bench: need 6 <= first_mode <= last_mode, states >= 1 and step > 0");
  }
  using Clock = std::chrono::steady_clock;
  BenchRow row;
  row.scene = scene.name;
  row.vertices = scene.mesh->vertex_count();
  row.triangles = scene.mesh->triangle_count();
  const ShellModel model = build_model(scene.mesh, scene.config);

  const int wanted = options.last_mode - options.first_mode + 1;
  const int skip = options.first_mode - 6;
  const auto t0 = Clock::now();
  ModeSet modes;
  std::vector<int> nonrigid;
  for (int k = std::min(model.dofs(), options.last_mode + 7);; k = std::min(model.dofs(), 2 * k)) {
    modes = rest_modes(model, k);
    nonrigid = nonrigid_modes(*scene.mesh, model.mass(), modes);
    if (static_cast<int>(nonrigid.size()) >= skip + wanted || k == model.dofs()) break;
  }
  row.modes_s = std::chrono::duration<double>(Clock::now() - t0).count();
  if (static_cast<int>(nonrigid.size()) < skip + wanted) fail(ErrorCode::InvalidArgument, "bench: scene has too few modes");

  std::vector<std::vector<double>> times(wanted);
  std::vector<int> failed(wanted, 0);
  parallel_for(wanted, options.threads, [&](int j) {
    FoldOptions fo;
    fo.solver = scene.config.solver;
    fo.steps = options.states;
    const SparseMatrix J = curvature_jacobian(*scene.mesh, scene.mesh->rest_state());
    const StrainPath path = strain_path(J, scene.mesh->rest_angles(), modes, {nonrigid[skip + j]}, {1.0});
    fo.t_max = options.step * options.states * path.default_t_max(kDefaultAngleLimit);
    const Trajectory tr = fold_path(model, path, fo);
    for (std::size_t s = 1; s < tr.steps.size(); ++s) times[j].push_back(tr.steps[s].stats.wall_time_s);
    failed[j] = options.states - static_cast<int>(times[j].size());
  });
  row.modes = wanted;
  double sum = 0.0;
  for (int j = 0; j < wanted; ++j) {
    for (double t : times[j]) {
      sum += t;
      row.max_state_s = std::max(row.max_state_s, t);
      ++row.states;
    }
    row.failed_states += failed[j];
  }
  row.mean_state_s = row.states ? sum / row.states : 0.0;
  return row;
}

std::string bench_csv(const std::vector<BenchRow>& rows) {
  std::string out = "scene,vertices,triangles,modes,states,failed_states,mean_state_s,max_state_s,modes_s\n";
  for (const auto& r : rows) {
    out += r.scene + "," + std::to_string(r.vertices) + "," + std::to_string(r.triangles) + "," +
           std::to_string(r.modes) + "," + std::to_string(r.states) + "," + std::to_string(r.failed_states) + "," +
           g17(r.mean_state_s) + "," + g17(r.max_state_s) + "," + g17(r.modes_s) + "\n";
  }
  return out;
}

}  // namespace foldlab
