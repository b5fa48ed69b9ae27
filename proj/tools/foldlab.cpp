// SPDX-License-Identifier: Apache-2.0
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "foldlab/foldlab.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kUsage = 1, kSolver = 2, kIo = 3 };

struct Failure {
  int exit;
  std::string message;
};

int exit_for(fl_status s) {
  switch (s) {
    case FL_OK:
      return kOk;
    case FL_ERR_SOLVER:
      return kSolver;
    case FL_ERR_IO:
      return kIo;
    default:
      return kUsage;
  }
}

void check(fl_status s, const std::string& what) {
  if (s != FL_OK) throw Failure{exit_for(s), what + ": " + fl_last_error()};
}

template <class F>
std::string fetch(F&& f) {
  size_t len = 0;
  check(f(nullptr, 0, &len), "string query");
  std::string s(len + 1, '\0');
  check(f(s.data(), s.size(), &len), "string query");
  s.resize(len);
  return s;
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure{kIo, "cannot open " + path};
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text)) throw Failure{kIo, "cannot write " + path.string()};
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Failure{kIo, "cannot create " + dir.string() + ": " + ec.message()};
}

template <class T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using ScenePtr = std::unique_ptr<fl_scene, Deleter<fl_scene, fl_scene_free>>;
using ModesPtr = std::unique_ptr<fl_modes, Deleter<fl_modes, fl_modes_free>>;
using TrajPtr = std::unique_ptr<fl_trajectory, Deleter<fl_trajectory, fl_trajectory_free>>;
using TilingPtr = std::unique_ptr<fl_tiling, Deleter<fl_tiling, fl_tiling_free>>;
using InversePtr = std::unique_ptr<fl_inverse, Deleter<fl_inverse, fl_inverse_free>>;

struct SceneArgs {
  std::string scene;
  std::string mesh;
  std::string config;

  void add(CLI::App* app) {
    app->add_option("--scene", scene, "built-in scene name");
    app->add_option("--mesh", mesh, "triangle mesh (OBJ)");
    app->add_option("--config", config, "material/solver configuration (JSON)");
  }

  std::string label() const { return mesh.empty() ? scene : fs::path(mesh).stem().string(); }

  ScenePtr open() const {
    if (scene.empty() == mesh.empty()) throw Failure{kUsage, "give exactly one of --scene or --mesh"};
    fl_scene* s = nullptr;
    const std::string cfg = config.empty() ? std::string() : read_text(config);
    if (!mesh.empty()) {
      check(fl_scene_load(mesh.c_str(), cfg.empty() ? nullptr : cfg.c_str(), &s), "loading " + mesh);
      return ScenePtr(s);
    }
    check(fl_scene_builtin(scene.c_str(), &s), "scene " + scene);
    ScenePtr out(s);
    if (!cfg.empty()) check(fl_scene_set_config(out.get(), cfg.c_str()), "config " + config);
    return out;
  }
};

ModesPtr load_or_compute(const fl_scene* scene, const std::string& modes_file, int count) {
  fl_modes* m = nullptr;
  if (!modes_file.empty()) {
    check(fl_modes_load(modes_file.c_str(), &m), "loading " + modes_file);
    ModesPtr out(m);
    if (fl_modes_dimension(m) != fl_scene_dofs(scene)) throw Failure{kUsage, modes_file + " does not match the mesh"};
    if (fl_modes_count(m) < count) {
      throw Failure{kUsage, modes_file + " holds " + std::to_string(fl_modes_count(m)) + " modes, need " +
                                std::to_string(count)};
    }
    return out;
  }
  check(fl_modes_compute(scene, count, &m), "eigenmodes");
  return ModesPtr(m);
}

std::vector<int> nonrigid_of(const fl_scene* scene, const fl_modes* modes) {
  int count = 0;
  check(fl_modes_nonrigid(scene, modes, nullptr, 0, &count), "rigid classification");
  std::vector<int> idx(count);
  check(fl_modes_nonrigid(scene, modes, idx.data(), count, &count), "rigid classification");
  return idx;
}

// Smallest computed mode set holding at least `wanted` non-rigid modes.
ModesPtr modes_with_nonrigid(const fl_scene* scene, int wanted) {
  const int dofs = fl_scene_dofs(scene);
  for (int k = std::min(dofs, wanted + 10);; k = std::min(dofs, 2 * k)) {
    ModesPtr m = load_or_compute(scene, "", k);
    if (static_cast<int>(nonrigid_of(scene, m.get()).size()) >= wanted || k == dofs) return m;
  }
}

fl_step_info step_info(const fl_trajectory* tr, int s) {
  fl_step_info info;
  check(fl_trajectory_step(tr, s, &info), "trajectory step");
  return info;
}

void print_steps(const fl_trajectory* tr) {
  std::printf("%5s %12s %12s %12s %8s %10s %6s\n", "step", "t", "b_m", "E_total_J", "memb", "strain", "iters");
  for (int s = 0; s < fl_trajectory_steps(tr); ++s) {
    const fl_step_info i = step_info(tr, s);
    const double ratio = i.report.total > 0 ? i.report.membrane / i.report.total : 0.0;
    std::printf("%5d %12.5g %12.5g %12.5g %8.4f %10.5g %6d\n", s, i.t, i.report.mass_displacement, i.report.total,
                ratio, i.report.max_strain, i.newton_iters);
  }
}

int finish_trajectory(const fl_trajectory* tr, fl_status status, const std::string& what) {
  if (status == FL_OK) return kOk;
  std::cerr << "foldlab: " << what << " stopped after " << fl_trajectory_steps(tr) - 1
            << " steps: " << fetch([&](char* b, size_t c, size_t* l) { return fl_trajectory_error(tr, b, c, l); })
            << "\n";
  return kSolver;
}

fl_fold_options fold_options(double tmax, int steps) {
  fl_fold_options o = fl_fold_options_default();
  o.t_max = tmax;
  o.steps = steps;
  return o;
}

// ---- subcommands -------------------------------------------------------------

int cmd_modes(const SceneArgs& sa, int count, const std::string& out) {
  ScenePtr scene = sa.open();
  ModesPtr modes = load_or_compute(scene.get(), "", count);
  const int k = fl_modes_count(modes.get());
  std::string csv = "index,eigenvalue,normal_fraction,rigid_fraction\n";
  std::printf("%6s %16s %8s %8s\n", "index", "lambda", "normal", "rigid");
  for (int i = 0; i < k; ++i) {
    double nf = 0.0, rf = 0.0;
    check(fl_modes_normal_fraction(scene.get(), modes.get(), i, &nf), "mode classification");
    check(fl_modes_rigid_fraction(scene.get(), modes.get(), i, &rf), "mode classification");
    const double lambda = fl_modes_eigenvalue(modes.get(), i);
    std::printf("%6d %16.9g %8.4f %8.4f\n", i, lambda, nf, rf);
    char line[128];
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g\n", i, lambda, nf, rf);
    csv += line;
  }
  make_dir(out);
  check(fl_modes_save(modes.get(), fl_scene_vertex_count(scene.get()), (fs::path(out) / "modes.bin").c_str()),
        "saving modes");
  write_text(fs::path(out) / "modes.csv", csv);
  return kOk;
}

struct Blend {
  std::vector<int> modes;
  std::vector<double> coefficients;
};

Blend read_blend(const std::string& path) {
  json j;
  try {
    j = json::parse(read_text(path));
    Blend b{j.at("modes").get<std::vector<int>>(), j.at("coefficients").get<std::vector<double>>()};
    if (b.modes.empty() || b.modes.size() != b.coefficients.size()) {
      throw Failure{kUsage, path + ": modes and coefficients must be non-empty and of equal length"};
    }
    return b;
  } catch (const json::exception& e) {
    throw Failure{kUsage, path + ": " + e.what()};
  }
}

int cmd_fold(const SceneArgs& sa, int mode, const std::string& blend_file, const std::string& modes_file, int steps,
             double tmax, const std::string& baseline, const std::string& out) {
  ScenePtr scene = sa.open();
  const fl_fold_options opts = fold_options(tmax, steps);
  fl_trajectory* raw = nullptr;
  fl_status st;
  json extra = {{"scene", sa.label()}, {"steps", steps}, {"t_max_requested", tmax}};
  Blend blend;
  int lm_mode = mode;
  if (!blend_file.empty()) {
    blend = read_blend(blend_file);
    const int need = *std::max_element(blend.modes.begin(), blend.modes.end()) + 1;
    ModesPtr modes = load_or_compute(scene.get(), modes_file, need);
    st = fl_fold_blend(scene.get(), modes.get(), blend.modes.data(), blend.coefficients.data(),
                       static_cast<int>(blend.modes.size()), &opts, &raw);
    if (raw == nullptr) check(st, "fold");
    lm_mode = -1;
  } else {
    if (mode < 0) throw Failure{kUsage, "--mode must be non-negative"};
    ModesPtr modes = load_or_compute(scene.get(), modes_file, mode + 1);
    st = fl_fold_mode(scene.get(), modes.get(), mode, &opts, &raw);
    if (raw == nullptr) check(st, "fold");
    TrajPtr tr(raw);
    extra["mode"] = mode;
    print_steps(tr.get());
    check(fl_trajectory_write(scene.get(), tr.get(), out.c_str(), extra.dump().c_str()), "writing trajectory");
    if (baseline == "lm") {
      fl_trajectory* lm = nullptr;
      check(fl_linear_mode_matched(scene.get(), modes.get(), mode, tr.get(), &lm), "linear baseline");
      TrajPtr lmp(lm);
      extra["baseline_of"] = "ssm";
      check(fl_trajectory_write(scene.get(), lm, (fs::path(out) / "lm").c_str(), extra.dump().c_str()),
            "writing baseline");
      std::printf("linear-mode baseline at matched mass displacement:\n");
      print_steps(lm);
    }
    return finish_trajectory(tr.get(), st, "fold");
  }
  TrajPtr tr(raw);
  print_steps(tr.get());
  check(fl_trajectory_write(scene.get(), tr.get(), out.c_str(), extra.dump().c_str()), "writing trajectory");
  if (baseline == "lm" && lm_mode < 0) std::cerr << "foldlab: --baseline lm is ignored for blends\n";
  return finish_trajectory(tr.get(), st, "fold");
}

int cmd_compare(const SceneArgs& sa, int mode, double strain, const std::string& out) {
  ScenePtr scene = sa.open();
  ModesPtr modes = load_or_compute(scene.get(), "", mode + 1);
  fl_matched_comparison c;
  check(fl_compare_at_strain(scene.get(), modes.get(), mode, strain, &c), "comparison");
  const auto row = [](const char* name, const fl_energy_report& r) {
    std::printf("%-4s E_total %.6g J  membrane %.6g J  bending %.6g J  max strain %.6g\n", name, r.total, r.membrane,
                r.bending, r.max_strain);
  };
  std::printf("mass displacement b = %.6g m (t_lm %.6g, t_ssm %.6g)\n", c.b, c.t_lm, c.t_ssm);
  row("lm", c.lm);
  row("ssm", c.ssm);
  std::printf("energy ratio ssm/lm = %.6g\n", c.ssm.total / c.lm.total);
  if (!out.empty()) {
    const auto rep = [](const fl_energy_report& r) {
      return json{{"E_total_J", r.total},       {"E_membrane_J", r.membrane}, {"E_bending_J", r.bending},
                  {"E_penalty_J", r.penalty},   {"E_barrier_J", r.barrier},   {"max_strain", r.max_strain},
                  {"mass_displacement_m", r.mass_displacement}};
    };
    json j = {{"scene", sa.label()}, {"mode", mode},          {"strain_threshold", strain}, {"b", c.b},
              {"t_lm", c.t_lm},      {"t_ssm", c.t_ssm},      {"lm", rep(c.lm)},            {"ssm", rep(c.ssm)}};
    make_dir(out);
    write_text(fs::path(out) / "compare.json", j.dump(2) + "\n");
  }
  return kOk;
}

int cmd_tile(const SceneArgs& sa, const std::string& kind, int mode, int steps, double tmax, int nx, int ny,
             const std::string& out) {
  if (nx < 1 || ny < 1) throw Failure{kUsage, "--nx and --ny must be at least 1"};
  ScenePtr scene = sa.open();
  fl_tiling* t = nullptr;
  check(fl_tiling_create(scene.get(), kind.c_str(), &t), "tiling");
  TilingPtr tiling(t);
  if (mode < 0) throw Failure{kUsage, "--mode must be non-negative"};
  fl_modes* m = nullptr;
  check(fl_tiling_modes(t, mode + 1, &m), "periodic eigenmodes");
  ModesPtr modes(m);
  const fl_fold_options opts = fold_options(tmax, steps);
  fl_trajectory* raw = nullptr;
  const fl_status st = fl_tiling_fold(t, m, mode, &opts, &raw);
  if (raw == nullptr) check(st, "periodic fold");
  TrajPtr tr(raw);
  print_steps(tr.get());

  const int n = fl_scene_vertex_count(scene.get());
  std::vector<double> x(3 * n);
  json errors = json::array();
  double worst = 0.0;
  for (int s = 0; s < fl_trajectory_steps(raw); ++s) {
    check(fl_trajectory_state(raw, s, x.data()), "trajectory state");
    double e = 0.0;
    check(fl_tiling_periodicity_error(t, x.data(), &e), "periodicity error");
    errors.push_back(e);
    worst = std::max(worst, e);
  }
  json extra = {{"scene", sa.label()}, {"tiling", kind},    {"mode", mode},
                {"nx", nx},            {"ny", ny},          {"reduced_dimension", fl_tiling_dimension(t)},
                {"periodicity_error_m", errors}};
  check(fl_trajectory_write(scene.get(), raw, out.c_str(), extra.dump().c_str()), "writing trajectory");
  for (int s = 0; s < fl_trajectory_steps(raw); ++s) {
    check(fl_trajectory_state(raw, s, x.data()), "trajectory state");
    char name[32];
    std::snprintf(name, sizeof name, "tiled_%04d.obj", s);
    check(fl_tiling_export(t, x.data(), nx, ny, (fs::path(out) / name).c_str(), nullptr, nullptr), "tiling export");
  }
  std::printf("reduced dimension %d, max periodicity error %.3g m\n", fl_tiling_dimension(t), worst);
  return finish_trajectory(raw, st, "periodic fold");
}

std::vector<double> parse_sphere(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw Failure{kUsage, "--sphere expects cx,cy,cz,r"};
    }
  }
  if (v.size() != 4 || !(v[3] > 0)) throw Failure{kUsage, "--sphere expects cx,cy,cz,r with r > 0"};
  return v;
}

int cmd_inverse(const SceneArgs& sa, int mode_count, const std::string& sphere, int max_iters, double regularization,
                const std::string& out) {
  ScenePtr scene = sa.open();
  fl_inverse_options o = fl_inverse_options_default();
  if (!sphere.empty()) {
    const auto s = parse_sphere(sphere);
    o.center[0] = s[0];
    o.center[1] = s[1];
    o.center[2] = s[2];
    o.radius = s[3];
  }
  o.modes = mode_count;
  o.max_iters = max_iters;
  o.regularization = regularization;
  if (mode_count < 1) throw Failure{kUsage, "--modes must be positive"};
  ModesPtr modes = modes_with_nonrigid(scene.get(), mode_count);
  fl_inverse* r = nullptr;
  check(fl_inverse_sphere(scene.get(), modes.get(), &o, &r), "inverse design");
  InversePtr res(r);

  const int m = fl_inverse_mode_count(r);
  std::vector<int> idx(m);
  std::vector<double> c(m);
  check(fl_inverse_mode_indices(r, idx.data()), "result");
  check(fl_inverse_coefficients(r, c.data()), "result");
  std::vector<double> x(3 * fl_scene_vertex_count(scene.get()));
  check(fl_inverse_state(r, x.data()), "result");
  const std::string reason =
      fetch([&](char* b, size_t cap, size_t* l) { return fl_inverse_stop_reason(r, b, cap, l); });

  std::string csv = "iteration,objective,grad_norm,step_norm,solves,wall_time_s\n";
  double objective = 0.0;
  for (int i = 0; i < fl_inverse_iterations(r); ++i) {
    fl_inverse_iterate it;
    check(fl_inverse_iterate_at(r, i, &it), "result");
    char line[200];
    std::snprintf(line, sizeof line, "%d,%.17g,%.17g,%.17g,%d,%.17g\n", it.iteration, it.objective, it.grad_norm,
                  it.step_norm, it.solves, it.wall_time_s);
    csv += line;
    objective = it.objective;
  }
  fl_energy_report rep;
  check(fl_scene_energy(scene.get(), x.data(), &rep), "energy");
  const double excess = fl_inverse_excess(r);
  json j = {{"scene", sa.label()},
            {"modes", idx},
            {"coefficients", c},
            {"sphere", {{"center", {o.center[0], o.center[1], o.center[2]}}, {"radius", o.radius}}},
            {"objective", objective},
            {"excess_m", excess},
            {"max_strain", rep.max_strain},
            {"iterations", fl_inverse_iterations(r) - 1},
            {"stop_reason", reason}};
  make_dir(out);
  write_text(fs::path(out) / "c.json", j.dump(2) + "\n");
  write_text(fs::path(out) / "convergence.csv", csv);
  check(fl_scene_write_obj(scene.get(), x.data(), (fs::path(out) / "final.obj").c_str()), "writing final frame");
  std::printf("objective %.6g after %d iterations (%s); largest excess %.3g m; max strain %.4g\n", objective,
              fl_inverse_iterations(r) - 1, reason.c_str(), excess, rep.max_strain);
  return kOk;
}

int cmd_bench(const std::vector<std::string>& scenes, const std::vector<std::string>& meshes,
              const std::string& config, int first, int last, int states, double step, int threads,
              const std::string& out) {
  std::string csv = "scene,vertices,triangles,modes,states,failed_states,mean_state_s,max_state_s,modes_s\n";
  std::cout << csv << std::flush;
  std::vector<SceneArgs> all;
  for (const auto& s : scenes) all.push_back({s, "", config});
  for (const auto& m : meshes) all.push_back({"", m, config});
  for (const auto& sa : all) {
    ScenePtr scene = sa.open();
    fl_bench_row r;
    check(fl_bench(scene.get(), first, last, states, step, threads, &r), "bench " + sa.label());
    char line[256];
    std::snprintf(line, sizeof line, "%s,%d,%d,%d,%d,%d,%.17g,%.17g,%.17g\n", sa.label().c_str(), r.vertices,
                  r.triangles, r.modes, r.states, r.failed_states, r.mean_state_s, r.max_state_s, r.modes_s);
    csv += line;
    std::cout << line << std::flush;
  }
  if (!out.empty()) {
    make_dir(out);
    write_text(fs::path(out) / "bench.csv", csv);
  }
  return kOk;
}

int cmd_serve(const std::string& host, int port, int workers) {
  sigset_t set;
  sigemptyset(&set);
  sigaddset(&set, SIGINT);
  sigaddset(&set, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &set, nullptr);
  fl_server* server = nullptr;
  check(fl_server_start(host.c_str(), port, workers, &server), "starting service");
  std::printf("listening on http://%s:%d\n", host.c_str(), fl_server_port(server));
  std::fflush(stdout);
  int sig = 0;
  sigwait(&set, &sig);
  fl_server_stop(server);
  return kOk;
}

int cmd_scenes() {
  std::cout << fetch([](char* b, size_t c, size_t* l) { return fl_scene_names(b, c, l); });
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Modal folding of thin shells"};
  app.set_version_flag("--version", std::string(fl_version()));
  app.require_subcommand(1);
  std::string out;
  int mode = -1, steps = 10, count = 10;
  double tmax = -1.0;

  SceneArgs modes_sa;
  auto* modes = app.add_subcommand("modes", "eigenmodes of the rest state");
  modes_sa.add(modes);
  modes->add_option("--count", count, "number of modes")->check(CLI::NonNegativeNumber);
  modes->add_option("--out", out, "output directory")->required();

  SceneArgs fold_sa;
  std::string blend, modes_file, baseline = "none";
  auto* fold = app.add_subcommand("fold", "strain-space folding trajectory");
  fold_sa.add(fold);
  auto* mode_opt = fold->add_option("--mode", mode, "mode index");
  fold->add_option("--blend", blend, "JSON with modes and coefficients")->excludes(mode_opt);
  fold->add_option("--modes-file", modes_file, "mode set written by 'modes'");
  fold->add_option("--steps", steps, "continuation steps")->check(CLI::PositiveNumber);
  fold->add_option("--tmax", tmax, "path parameter at the last step (default: 0.9 pi angle limit)");
  fold->add_option("--baseline", baseline, "linear-mode baseline")->check(CLI::IsMember({"lm", "none"}));
  fold->add_option("--out", out, "output directory")->required();

  SceneArgs cmp_sa;
  double strain = 0.02;
  auto* compare = app.add_subcommand("compare", "linear vs strain-space mode at matched mass displacement");
  cmp_sa.add(compare);
  compare->add_option("--mode", mode, "mode index")->required();
  compare->add_option("--strain", strain, "linear-mode strain threshold");
  compare->add_option("--out", out, "output directory");

  SceneArgs tile_sa;
  std::string kind = "translation";
  int nx = 2, ny = 2;
  auto* tile = app.add_subcommand("tile", "periodic folding of a rectangular unit cell");
  tile_sa.add(tile);
  tile->add_option("--kind", kind, "tiling")->check(CLI::IsMember({"translation", "reflection"}));
  tile->add_option("--mode", mode, "reduced mode index")->required();
  tile->add_option("--steps", steps, "continuation steps")->check(CLI::PositiveNumber);
  tile->add_option("--tmax", tmax, "path parameter at the last step");
  tile->add_option("--nx", nx, "tiles along x");
  tile->add_option("--ny", ny, "tiles along y");
  tile->add_option("--out", out, "output directory")->required();

  SceneArgs inv_sa;
  int inv_modes = 50, max_iters = 200;
  double regularization = 0.0;
  std::string sphere;
  auto* inverse = app.add_subcommand("inverse", "fit the sheet into a sphere over the strain-space subspace");
  inv_sa.add(inverse);
  inverse->add_option("--modes", inv_modes, "number of non-rigid modes");
  inverse->add_option("--sphere", sphere, "cx,cy,cz,r in meters (default 0,0,0.03,0.06)");
  inverse->add_option("--max-iters", max_iters, "outer iterations");
  inverse->add_option("--regularization", regularization, "weight on |c|^2");
  inverse->add_option("--out", out, "output directory")->required();

  std::vector<std::string> bench_scenes, bench_meshes;
  std::string bench_config;
  int first = 6, last = 15, states = 10, threads = fl_thread_cap();
  double step = 0.1;
  auto* bench = app.add_subcommand("bench", "per-state solve timing");
  bench->add_option("--scene", bench_scenes, "built-in scenes");
  bench->add_option("--mesh", bench_meshes, "OBJ meshes");
  bench->add_option("--config", bench_config, "configuration for every scene");
  bench->add_option("--first-mode", first, "first mode (6 = first non-rigid)");
  bench->add_option("--last-mode", last, "last mode");
  bench->add_option("--states", states, "states per mode");
  bench->add_option("--step", step, "extrapolation step as a fraction of the default t_max");
  bench->add_option("--threads", threads, "modes solved in parallel");
  bench->add_option("--out", out, "output directory");

  std::string host = "127.0.0.1";
  int port = 8080, workers = 0;
  auto* serve = app.add_subcommand("serve", "HTTP and WebSocket design service");
  serve->add_option("--host", host, "bind address");
  serve->add_option("--port", port, "port (0 picks a free one)");
  serve->add_option("--workers", workers, "fold job workers");

  auto* assets = app.add_subcommand("assets", "write the built-in scenes as OBJ + JSON with a manifest");
  assets->add_option("--out", out, "output directory")->required();

  auto* scenes = app.add_subcommand("scenes", "list built-in scenes");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kUsage;
  }

  try {
    if (modes->parsed()) return cmd_modes(modes_sa, count, out);
    if (fold->parsed()) {
      if (mode < 0 && blend.empty()) throw Failure{kUsage, "give --mode or --blend"};
      return cmd_fold(fold_sa, mode, blend, modes_file, steps, tmax, baseline, out);
    }
    if (compare->parsed()) return cmd_compare(cmp_sa, mode, strain, out);
    if (tile->parsed()) return cmd_tile(tile_sa, kind, mode, steps, tmax, nx, ny, out);
    if (inverse->parsed()) return cmd_inverse(inv_sa, inv_modes, sphere, max_iters, regularization, out);
    if (bench->parsed()) {
      return cmd_bench(bench_scenes, bench_meshes, bench_config, first, last, states, step, threads, out);
    }
    if (serve->parsed()) return cmd_serve(host, port, workers);
    if (assets->parsed()) {
      check(fl_export_assets(out.c_str()), "exporting assets");
      return kOk;
    }
    if (scenes->parsed()) return cmd_scenes();
  } catch (const Failure& f) {
    std::cerr << "foldlab: " << f.message << "\n";
    return f.exit;
  }
  return kUsage;
}
