// SPDX-License-Identifier: Apache-2.0
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>
#include <numbers>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "foldlab/config.hpp"
#include "foldlab/inverse.hpp"
#include "foldlab/modal.hpp"
#include "foldlab/periodic.hpp"
#include "foldlab/report.hpp"
#include "foldlab/scenes.hpp"
#include "foldlab/strain_space.hpp"

using namespace foldlab;

namespace {

using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

Eigen::VectorXd random_vector(Eigen::Index n, double scale, std::mt19937& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = scale * u(rng);
  return v;
}

std::shared_ptr<const TriMesh> sheet5() { return std::make_shared<const TriMesh>(make_square_sheet(0.2, 4)); }

/// Strain-space trajectories shared by the bending, origami and solver checks.
struct Demo {
  std::string label;
  std::shared_ptr<const TriMesh> mesh;
  Eigen::VectorXd mass;
  Trajectory trajectory;
};

const std::vector<Demo>& demo_suite() {
  static const std::vector<Demo> suite = [] {
    std::vector<Demo> out;
    const auto run = [&](const std::string& scene, int count) {
      const Scene sc = make_scene(scene);
      const ShellModel model = build_model(sc.mesh, sc.config);
      const ModeSet modes = rest_modes(model, 20);
      const auto nonrigid = nonrigid_modes(*sc.mesh, model.mass(), modes);
      for (int k = 0; k < count; ++k) {
        FoldOptions o;
        o.solver = sc.config.solver;
        Demo d{scene + " mode " + std::to_string(nonrigid[k]), sc.mesh, model.mass(),
               fold_mode(model, modes, nonrigid[k], o)};
        out.push_back(std::move(d));
      }
    };
    run("square", 3);
    run("disc", 1);
    run("origami", 1);
    return out;
  }();
  return suite;
}

// ---- 1 ----------------------------------------------------------------------

Outcome derivatives() {
  const auto t0 = Clock::now();
  std::mt19937 rng(1);
  const auto m = sheet5();
  PenaltySet p;
  p.pins = pins_321(*m, 1e4);
  p.pins.push_back(Pin{m->vertex_count() - 1, {true, false, true}, Eigen::Vector3d(0.11, 0.0, 0.01), 3e3});
  p.springs.push_back(Spring{0, m->vertex_count() - 1, 5e3});
  p.springs.push_back(Spring{3, 17, 1e3});
  const ShellModel model(m, ShellMaterial{}, p);
  const double h = 1e-6 * m->diagonal();
  double worst_g = 0.0, worst_h = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    const State x = m->rest_state() + random_vector(m->rest_state().size(), 0.01, rng);
    const CurvatureVector kbar = m->rest_angles() + random_vector(m->hinge_count(), 0.5, rng);
    const Eigen::VectorXd g = model.gradient(kbar, x);
    const Eigen::MatrixXd H = Eigen::MatrixXd(model.hessian(kbar, x));
    Eigen::VectorXd g_fd(x.size());
    Eigen::MatrixXd H_fd(x.size(), x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
      State xp = x, xm = x;
      xp[i] += h;
      xm[i] -= h;
      g_fd[i] = (model.energy(kbar, xp).total - model.energy(kbar, xm).total) / (2 * h);
      H_fd.col(i) = (model.gradient(kbar, xp) - model.gradient(kbar, xm)) / (2 * h);
    }
    worst_g = std::max(worst_g, (g - g_fd).norm() / g.norm());
    for (Eigen::Index c = 0; c < H.cols(); ++c) {
      worst_h = std::max(worst_h, (H.col(c) - H_fd.col(c)).norm() / H.col(c).norm());
    }
  }
  const double t = seconds_since(t0);
  return {worst_g < 1e-5 && worst_h < 1e-4 && t < 10.0,
          "grad rel " + fmt("%.2e", worst_g) + " (< 1e-5), Hessian column rel " + fmt("%.2e", worst_h) +
              " (< 1e-4), " + fmt("%.2f", t) + " s (< 10 s)"};
}

// ---- 2 ----------------------------------------------------------------------

Outcome eigen_oracle() {
  const auto m = sheet5();
  const ShellMaterial mat;
  PenaltySet p;
  p.pins = pins_321(*m, mat.youngs * mat.thickness);
  const ShellModel pinned(m, mat, p);
  const SparseMatrix H = pinned.hessian(m->rest_angles(), m->rest_state());
  EigenOptions si;
  si.method = EigenMethod::ShiftInvert;
  const ModeSet got = eigenmodes(H, pinned.mass(), 12, si);

  const Eigen::MatrixXd Hd = Eigen::MatrixXd(H);
  const Eigen::MatrixXd Md = pinned.mass().asDiagonal();
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> oracle(Hd, Md);
  const Eigen::VectorXd lam = oracle.eigenvalues();
  const Eigen::MatrixXd V = oracle.eigenvectors();

  double worst_lambda = 0.0, worst_angle = 0.0;
  for (int i = 0; i < 12; ++i) {
    worst_lambda = std::max(worst_lambda, std::abs(got.eigenvalues[i] - lam[i]) / std::abs(lam[i]));
    const double gap_lo = i > 0 ? std::abs(lam[i] - lam[i - 1]) : INFINITY;
    const double gap_hi = std::abs(lam[i + 1] - lam[i]);
    if (std::min(gap_lo, gap_hi) < 1e-6 * std::abs(lam[i])) continue;
    const Eigen::VectorXd a = got.vectors.col(i), b = V.col(i);
    const double c = std::abs(a.dot(pinned.mass().cwiseProduct(b))) /
                     std::sqrt(a.dot(pinned.mass().cwiseProduct(a)) * b.dot(pinned.mass().cwiseProduct(b)));
    worst_angle = std::max(worst_angle, std::acos(std::min(1.0, c)));
  }

  const ShellModel free_model(m, mat);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> free_oracle(
      Eigen::MatrixXd(free_model.hessian(m->rest_angles(), m->rest_state())),
      Eigen::MatrixXd(free_model.mass().asDiagonal()), Eigen::EigenvaluesOnly);
  const Eigen::VectorXd fl = free_oracle.eigenvalues();
  int near_zero = 0;
  for (Eigen::Index i = 0; i < fl.size(); ++i) near_zero += std::abs(fl[i]) < 1e-8 * fl[6];

  return {worst_lambda < 1e-8 && worst_angle < 1e-6 && near_zero == 6,
          "lambda rel " + fmt("%.2e", worst_lambda) + " (< 1e-8), angle " + fmt("%.2e", worst_angle) +
              " rad (< 1e-6), free sheet " + std::to_string(near_zero) + " eigenvalues below 1e-8 lambda_7 (= 6)"};
}

// ---- 3 ----------------------------------------------------------------------

Outcome energy_ordering() {
  const auto t0 = Clock::now();
  const Scene sc = make_scene("square");
  const ShellModel model = build_model(sc.mesh, sc.config);
  const ModeSet modes = rest_modes(model, 20);
  const auto nonrigid = nonrigid_modes(*sc.mesh, model.mass(), modes);
  bool pass = true;
  std::string detail;
  for (int k = 0; k < 3; ++k) {
    const int i = nonrigid[k];
    const MatchedComparison c = compare_at_strain(model, modes, i, 0.02, sc.config.solver);
    if (!c.found) {
      pass = false;
      detail += "mode " + std::to_string(i) + ": " + c.error + "; ";
      continue;
    }
    const double ratio = c.ssm.total / c.lm.total;
    pass = pass && c.ssm.max_inplane_strain < 0.005 && ratio < 0.25;
    detail += "mode " + std::to_string(i) + " SSM strain " + fmt("%.2e", c.ssm.max_inplane_strain) + " E ratio " +
              fmt("%.3f", ratio) + "; ";
  }
  const double t = seconds_since(t0);
  pass = pass && t < 300.0;
  return {pass, detail + "bounds strain < 5e-3, ratio < 0.25, " + fmt("%.1f", t) + " s (< 300 s)"};
}

// ---- 4 ----------------------------------------------------------------------

Outcome bending_dominance() {
  bool pass = true;
  double worst = 0.0;
  std::string worst_label, detail;
  for (const Demo& d : demo_suite()) {
    if (!d.trajectory.complete()) {
      pass = false;
      detail += d.label + " incomplete (" + d.trajectory.error + "); ";
    }
    // The rest state carries no energy; its ratio is undefined.
    for (std::size_t s = 1; s < d.trajectory.steps.size(); ++s) {
      const EnergyReport& r = d.trajectory.steps[s].report;
      const double ratio = r.membrane / r.total;
      if (ratio > worst) {
        worst = ratio;
        worst_label = d.label;
      }
    }
  }
  pass = pass && worst < 0.05;
  return {pass, detail + "max membrane/total " + fmt("%.4f", worst) + " (< 0.05) on " + worst_label + " over " +
                    std::to_string(demo_suite().size()) + " trajectories"};
}

// ---- 5 ----------------------------------------------------------------------

/// Rotation of the sheet boundary about the center square's normal, seen
/// from the center square: the state is moved into the center square's
/// best-fit rigid frame and the polar angles of the perimeter vertices are
/// compared with their rest values.
double center_twist_deg(const TriMesh& mesh, const State& x, double panel) {
  const double a = 0.5 * panel, o = 1.5 * panel, eps = 1e-9;
  std::vector<int> center, perimeter;
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    const Eigen::Vector3d X = mesh.vertices()[v];
    if (std::abs(X.x()) <= a + eps && std::abs(X.y()) <= a + eps) center.push_back(v);
    if (std::abs(X.x()) >= o - eps || std::abs(X.y()) >= o - eps) perimeter.push_back(v);
  }
  Eigen::Matrix3Xd src(3, center.size()), dst(3, center.size());
  for (std::size_t k = 0; k < center.size(); ++k) {
    src.col(k) = mesh.vertices()[center[k]];
    dst.col(k) = x.segment<3>(3 * center[k]);
  }
  const Eigen::Matrix4d T = Eigen::umeyama(src, dst, false);
  const Eigen::Matrix3d R = T.topLeftCorner<3, 3>();
  const Eigen::Vector3d t = T.topRightCorner<3, 1>();
  double sum = 0.0;
  for (int v : perimeter) {
    const Eigen::Vector3d y = R.transpose() * (x.segment<3>(3 * v) - t);
    const Eigen::Vector3d X = mesh.vertices()[v];
    sum += std::remainder(std::atan2(y.y(), y.x()) - std::atan2(X.y(), X.x()), 2 * std::numbers::pi);
  }
  return std::abs(sum / perimeter.size()) * 180.0 / std::numbers::pi;
}

Outcome origami_twist() {
  const Demo& d = demo_suite().back();
  const double panel = 0.072;
  double strain = 0.0;
  for (const auto& s : d.trajectory.steps) strain = std::max(strain, s.report.max_inplane_strain);
  double peak = 0.0, peak_t = 0.0;
  for (const auto& s : d.trajectory.steps) {
    const double a = center_twist_deg(*d.mesh, s.x, panel);
    if (a > peak) {
      peak = a;
      peak_t = s.t / d.trajectory.steps.back().t;
    }
  }
  const double twist = center_twist_deg(*d.mesh, d.trajectory.steps.back().x, panel);
  const bool pass = d.trajectory.complete() && twist > 10.0 && strain < 0.02;
  return {pass, d.label + ": twist at t_max " + fmt("%.2f", twist) + " deg (> 10), peak " + fmt("%.2f", peak) +
                    " deg at " + fmt("%.1f", peak_t) + " t_max, max strain " + fmt("%.4f", strain) + " (< 0.02)" +
                    (d.trajectory.complete() ? "" : ", incomplete")};
}

// ---- 6 ----------------------------------------------------------------------

Outcome periodicity() {
  const Scene sc = make_scene("square");
  const TriMesh& m = *sc.mesh;
  const double tol = 1e-10 * m.diagonal();
  bool pass = true;
  std::string detail;
  for (TilingKind kind : {TilingKind::Translation, TilingKind::Reflection}) {
    const PeriodicReduction r = build_reduction(m, kind);
    const ShellMaterial mat = material_for(m, sc.config);
    PenaltySet p;
    p.pins = periodic_pins(m, kind, sc.config.default_penalty_weight());
    const ShellModel model(sc.mesh, mat, p);
    const ModeSet modes = periodic_modes(r, model, 12);
    ModeSet full;
    full.eigenvalues = modes.eigenvalues;
    full.vectors = r.map.P * modes.vectors;
    const auto nonrigid = nonrigid_modes(m, model.mass(), full);
    FoldOptions o;
    o.solver = sc.config.solver;
    const Trajectory tr = fold_periodic(model, r, modes, nonrigid.front(), o);
    double worst = 0.0;
    for (const auto& s : tr.steps) {
      if (kind == TilingKind::Translation) {
        worst = std::max(worst, periodicity_error(r, s.x));
        continue;
      }
      const Eigen::VectorXd q = r.restrict_state(s.x);
      const double a = q[r.period_index], b = q[r.period_index + 1];
      for (int v : r.left) worst = std::max(worst, std::abs(s.x[3 * v] - (r.center.x() - a)));
      for (int v : r.right) worst = std::max(worst, std::abs(s.x[3 * v] - (r.center.x() + a)));
      for (int v : r.bottom) worst = std::max(worst, std::abs(s.x[3 * v + 1] - (r.center.y() - b)));
      for (int v : r.top) worst = std::max(worst, std::abs(s.x[3 * v + 1] - (r.center.y() + b)));
    }
    pass = pass && tr.complete() && worst <= tol;
    detail += to_string(kind) + " mode " + std::to_string(nonrigid.front()) + " " + std::to_string(tr.steps.size()) +
              " states, max error " + fmt("%.2e", worst) + " m" + (tr.complete() ? "" : " (incomplete)") + "; ";
    if (kind == TilingKind::Reflection) {
      const double a = r.map.q_rest[r.period_index], b = r.map.q_rest[r.period_index + 1];
      pass = pass && std::abs(a - 0.1) < 1e-12 && std::abs(b - 0.1) < 1e-12;
      detail += "rest a " + fmt("%.6f", a) + " b " + fmt("%.6f", b) + "; ";
    }
  }
  return {pass, detail + "bound " + fmt("%.2e", tol) + " m"};
}

// ---- 7 ----------------------------------------------------------------------

Outcome inverse_design() {
  const auto t0 = Clock::now();
  const Scene sc = make_scene("disc");
  const ShellModel model = build_model(sc.mesh, sc.config);
  ModeSet modes;
  std::vector<int> idx;
  for (int k = 64;; k *= 2) {
    modes = rest_modes(model, k);
    idx = nonrigid_modes(*sc.mesh, model.mass(), modes);
    if (idx.size() >= 50) break;
  }
  idx.resize(50);
  const Sphere sphere{Eigen::Vector3d(0.0, 0.0, 0.03), 0.06};
  const SubspaceProblem problem(model, modes, idx, sphere_design_objective(sphere), sc.config.solver);
  const InverseResult r = optimize_design(problem, InverseOptions{});
  const double excess = sphere_excess(r.x, sphere);
  const int iterations = static_cast<int>(r.history.size()) - 1;

  // One-mode adjoint check on the hinge.
  const Scene hs = make_scene("hinge");
  const ShellModel hm = build_model(hs.mesh, hs.config);
  const ModeSet hmodes = rest_modes(hm, 1);
  SolverConfig tight;
  tight.grad_tol = 1e-5;
  const TriMesh& hmesh = *hs.mesh;
  const int a = hmesh.hinges()[0].flaps[0], b = hmesh.hinges()[0].flaps[1];
  const SubspaceProblem toy(hm, hmodes, {0},
                            [=](const State& x, Eigen::VectorXd* g) {
                              const double d = x[3 * b + 2] - x[3 * a + 2] - 0.02;
                              if (g) {
                                g->setZero(x.size());
                                (*g)[3 * b + 2] = 2 * d;
                                (*g)[3 * a + 2] = -2 * d;
                              }
                              return d * d;
                            },
                            tight);
  const double scale = strain_path(curvature_jacobian(hmesh, hmesh.rest_state()), hmesh.rest_angles(), hmodes, {0}, {1.0})
                           .default_t_max(kDefaultAngleLimit);
  const Eigen::VectorXd c = Eigen::VectorXd::Constant(1, 0.2 * scale);
  const SubspaceSolution s = toy.solve(c, hmesh.rest_state());
  const double adjoint = toy.gradient(c, s.x).value[0];
  const double step = 1e-5 * scale;
  const double fd = (toy.objective(toy.solve(c + Eigen::VectorXd::Constant(1, step), s.x).x) -
                     toy.objective(toy.solve(c - Eigen::VectorXd::Constant(1, step), s.x).x)) /
                    (2 * step);
  const double adjoint_err = std::abs(adjoint - fd) / std::abs(fd);

  const double t = seconds_since(t0);
  const bool pass = excess <= 1e-3 && iterations <= 200 && adjoint_err < 1e-3 && t < 1800.0;
  return {pass, "disc " + std::to_string(sc.mesh->vertex_count()) + " vertices, 50 modes: excess " +
                    fmt("%.2e", excess) + " m (<= 1e-3) after " + std::to_string(iterations) +
                    " iterations (<= 200), stop " + r.stop_reason + "; hinge adjoint vs FD rel " +
                    fmt("%.2e", adjoint_err) + " (< 1e-3); " + fmt("%.1f", t) + " s (< 1800 s)"};
}

// ---- 8 ----------------------------------------------------------------------

class Quadratic final : public Objective {
 public:
  explicit Quadratic(int n) : A_(n, n), b_(Eigen::VectorXd::LinSpaced(n, -1.0, 2.0)) {
    std::vector<Eigen::Triplet<double>> t;
    for (int i = 0; i < n; ++i) {
      t.emplace_back(i, i, 4.0 + i);
      if (i + 1 < n) {
        t.emplace_back(i, i + 1, -1.0);
        t.emplace_back(i + 1, i, -1.0);
      }
    }
    A_.setFromTriplets(t.begin(), t.end());
  }
  int dimension() const override { return static_cast<int>(b_.size()); }
  bool evaluate(const Eigen::VectorXd& x, double* f, Eigen::VectorXd* g, SparseMatrix* H) const override {
    const Eigen::VectorXd Ax = A_ * x;
    if (f) *f = 0.5 * x.dot(Ax) - b_.dot(x);
    if (g) *g = Ax - b_;
    if (H) *H = A_;
    return true;
  }

 private:
  SparseMatrix A_;
  Eigen::VectorXd b_;
};

/// Largest inter-step M-norm jump allowed, as a multiple of the mean jump.
const std::map<std::string, double> kJumpBound = {
    {"square", 2.0}, {"disc", 2.0}, {"origami", 2.0}};

Outcome solver_contracts() {
  SolverConfig qc;
  qc.grad_tol = 1e-10;
  const SolveResult q = minimize(Quadratic(40), Eigen::VectorXd::Zero(40), qc);
  bool pass = q.converged() && q.stats.iterations == 1;
  std::string detail = "quadratic " + std::to_string(q.stats.iterations) + " iteration(s); ";

  int increases = 0, solves = 0;
  for (const Demo& d : demo_suite()) {
    for (const auto& s : d.trajectory.steps) {
      ++solves;
      const auto& h = s.stats.energy_history;
      for (std::size_t k = 1; k < h.size(); ++k) increases += h[k] > h[k - 1];
    }
  }
  pass = pass && increases == 0;
  detail += std::to_string(increases) + " energy increases over " + std::to_string(solves) + " solves; ";

  double worst = 0.0;
  std::string worst_label;
  for (const Demo& d : demo_suite()) {
    const auto& st = d.trajectory.steps;
    if (st.size() < 3) continue;
    std::vector<double> jumps;
    for (std::size_t k = 1; k < st.size(); ++k) {
      const Eigen::VectorXd dx = st[k].x - st[k - 1].x;
      jumps.push_back(std::sqrt(dx.dot(d.mass.cwiseProduct(dx))));
    }
    double mean = 0.0, top = 0.0;
    for (double j : jumps) {
      mean += j / jumps.size();
      top = std::max(top, j);
    }
    const double ratio = top / mean;
    const std::string scene = d.label.substr(0, d.label.find(' '));
    pass = pass && ratio <= kJumpBound.at(scene);
    if (ratio > worst) {
      worst = ratio;
      worst_label = d.label;
    }
  }
  return {pass, detail + "max jump / mean jump " + fmt("%.3f", worst) + " on " + worst_label + " (<= 2.0)"};
}

// ---- 9 ----------------------------------------------------------------------

Outcome timing() {
  BenchOptions o;
  o.threads = 1;
  const BenchRow row = bench_scene(make_scene("disc"), o);
  const bool pass = row.failed_states == 0 && row.mean_state_s < 30.0;
  return {pass, "disc " + std::to_string(row.vertices) + " vertices, modes 6-15 x 10 states: mean " +
                    fmt("%.3f", row.mean_state_s) + " s (< 30 s), max " + fmt("%.3f", row.max_state_s) + " s, " +
                    std::to_string(row.failed_states) + " failed states, modes " + fmt("%.1f", row.modes_s) + " s"};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"derivatives", derivatives},         {"eigen oracle", eigen_oracle},
      {"energy ordering", energy_ordering}, {"bending dominance", bending_dominance},
      {"origami twist", origami_twist},     {"periodicity", periodicity},
      {"inverse design", inverse_design},   {"solver contracts", solver_contracts},
      {"timing", timing}};
  std::vector<int> selected, known;
  CLI::App app{"Acceptance criteria 1-9; prints one PASS/FAIL line each"};
  app.add_option("criteria", selected, "Run only these criteria")->check(CLI::Range(1, 9));
  app.add_option("--known-fail", known, "Criteria whose failure does not set the exit status")
      ->check(CLI::Range(1, 9));
  CLI11_PARSE(app, argc, argv);
  const std::set<int> only(selected.begin(), selected.end()), tolerated(known.begin(), known.end());
  int failed = 0, unexpected = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int n = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(n)) continue;
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    failed += !o.pass;
    unexpected += !o.pass && !tolerated.count(n);
    std::printf("criterion %d %s: %s -- %s\n", n, o.pass ? "PASS" : "FAIL", criteria[k].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d failed, %d of them listed with --known-fail\n", failed, failed - unexpected);
  return unexpected ? 1 : 0;
}
