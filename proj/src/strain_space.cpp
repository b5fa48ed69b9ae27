// SPDX-License-Identifier: Apache-2.0
#include "foldlab/strain_space.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "foldlab/error.hpp"

namespace foldlab {

namespace {

class OwnedReducedObjective final : public Objective {
 public:
  OwnedReducedObjective(const ShellModel& model, CurvatureVector kbar, std::shared_ptr<CurvatureVector> branch,
                        const AffineMap& map)
      : shell_(model, std::move(kbar), std::move(branch)), reduced_(shell_, map.P, map.offset) {}
  int dimension() const override { return reduced_.dimension(); }
  bool evaluate(const Eigen::VectorXd& q, double* f, Eigen::VectorXd* g, SparseMatrix* H) const override {
    return reduced_.evaluate(q, f, g, H);
  }
  double default_grad_tol() const override { return shell_.default_grad_tol(); }
  void accept(const Eigen::VectorXd& q) const override { reduced_.accept(q); }

 private:
  ShellObjective shell_;
  AffineReducedObjective reduced_;
};

}  // namespace

SparseMatrix curvature_jacobian(const TriMesh& mesh, const State& x) {
  check_state(mesh, x);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(12 * mesh.hinge_count());
  for (int h = 0; h < mesh.hinge_count(); ++h) {
    const auto& hinge = mesh.hinges()[h];
    const std::array<int, 4> v{hinge.edge[0], hinge.edge[1], hinge.flaps[0], hinge.flaps[1]};
    const auto g = dihedral_gradient(mesh, x, h);
    for (int a = 0; a < 4; ++a)
      for (int c = 0; c < 3; ++c) trip.emplace_back(h, 3 * v[a] + c, g[3 * a + c]);
  }
  SparseMatrix J(mesh.hinge_count(), 3 * mesh.vertex_count());
  J.setFromTriplets(trip.begin(), trip.end());
  return J;
}

StrainPath::StrainPath(CurvatureVector rest, Eigen::VectorXd direction)
    : rest_(std::move(rest)), direction_(std::move(direction)) {
  if (rest_.size() != direction_.size()) fail(ErrorCode::InvalidArgument, "strain path: size mismatch");
  if (!rest_.allFinite() || !direction_.allFinite()) fail(ErrorCode::InvalidArgument, "strain path: non-finite entries");
}

double StrainPath::default_t_max(double limit) const {
  double t_max = std::numeric_limits<double>::infinity();
  for (Eigen::Index h = 0; h < direction_.size(); ++h) {
    const double v = direction_[h];
    if (v == 0.0) continue;
    const double bound = (std::copysign(limit, v) - rest_[h]) / v;
    t_max = std::min(t_max, std::max(0.0, bound));
  }
  return std::isfinite(t_max) ? t_max : 0.0;
}

StrainPath strain_path(const SparseMatrix& J, const CurvatureVector& rest, const ModeSet& modes,
                       const std::vector<int>& indices, const std::vector<double>& coefficients) {
  if (indices.empty() || indices.size() != coefficients.size()) {
    fail(ErrorCode::InvalidArgument, "strain path needs matching, non-empty mode indices and coefficients");
  }
  const Eigen::Map<const Eigen::VectorXd> c(coefficients.data(), static_cast<Eigen::Index>(coefficients.size()));
  const double norm = c.norm();
  if (!(norm > 0) || !std::isfinite(norm)) fail(ErrorCode::InvalidArgument, "modal coefficients must be finite and non-zero");
  Eigen::VectorXd e = Eigen::VectorXd::Zero(J.cols());
  for (std::size_t j = 0; j < indices.size(); ++j) e += (coefficients[j] / norm) * modes.mode(indices[j]);
  return StrainPath(rest, J * e);
}

double mass_displacement(const Eigen::VectorXd& mass, const State& rest, const State& x) {
  const Eigen::VectorXd u = x - rest;
  return std::sqrt(0.5 * u.dot(mass.cwiseProduct(u)));
}

std::vector<double> linspace_grid(double t_max, int steps) {
  if (steps < 1) fail(ErrorCode::InvalidArgument, "steps must be at least 1");
  if (!std::isfinite(t_max) || t_max < 0) fail(ErrorCode::InvalidArgument, "t_max must be finite and non-negative");
  if (t_max == 0.0) return {0.0};
  std::vector<double> grid(steps + 1);
  for (int s = 0; s <= steps; ++s) grid[s] = t_max * s / steps;
  return grid;
}

Trajectory fold_path(const ShellModel& model, const StrainPath& path, const FoldOptions& options, const AffineMap* map) {
  const TriMesh& mesh = model.mesh();
  if (path.rest().size() != mesh.hinge_count()) fail(ErrorCode::InvalidArgument, "strain path does not match the mesh");
  const double t_max = options.t_max < 0 ? path.default_t_max(kDefaultAngleLimit) : options.t_max;
  const auto grid = linspace_grid(t_max, options.steps);

  Trajectory out;
  out.kind = map ? "periodic" : "ssm";
  out.fingerprint = model.fingerprint();

  // Dihedrals are followed continuously from the rest state; a retry
  // restarts from the branch of its warm start.
  Eigen::VectorXd anchor_x = map ? map->q_rest : mesh.rest_state();
  CurvatureVector anchor = mesh.rest_angles();
  auto live = std::make_shared<CurvatureVector>(anchor);
  const auto objective_at = [&](double t, const Eigen::VectorXd& x_start) -> std::unique_ptr<Objective> {
    if (x_start.size() != anchor_x.size() || x_start != anchor_x) {
      anchor_x = x_start;
      anchor = *live;
    }
    live = std::make_shared<CurvatureVector>(anchor);
    if (map) return std::make_unique<OwnedReducedObjective>(model, path.at(t), live, *map);
    return std::make_unique<ShellObjective>(model, path.at(t), live);
  };
  const Eigen::VectorXd x_init = map ? map->q_rest : mesh.rest_state();
  const auto on_step = [&](const ContinuationStep& s) {
    if (!out.error.empty()) return;
    if (s.stats.status != SolveStatus::Converged) {
      std::ostringstream msg;
      msg << "solver " << to_string(s.stats.status) << " at t = " << s.t << " (|g| = " << s.stats.final_grad_norm
          << " N after " << s.stats.iterations << " iterations)";
      out.error = msg.str();
      return;
    }
    TrajectoryStep step;
    step.t = s.t;
    step.x = map ? map->expand(s.x) : s.x;
    step.substeps = s.substeps;
    const CurvatureVector angles = *live;
    step.report = model.energy(path.rest(), step.x, &angles);
    step.actuated_energy = model.energy(path.at(s.t), step.x, &angles).total;
    step.stats = s.stats;
    out.steps.push_back(std::move(step));
    if (options.on_step) options.on_step(out.steps.back());
  };
  try {
    continuation(objective_at, grid, x_init, options.solver, on_step, options.max_step_halvings);
  } catch (const Error& e) {
    out.error = e.what();
  }
  return out;
}

Trajectory fold_mode(const ShellModel& model, const ModeSet& modes, int i, const FoldOptions& options) {
  return fold_blend(model, modes, {i}, {1.0}, options);
}

Trajectory fold_blend(const ShellModel& model, const ModeSet& modes, const std::vector<int>& indices,
                      const std::vector<double>& coefficients, const FoldOptions& options) {
  const TriMesh& mesh = model.mesh();
  if (modes.vectors.rows() != model.dofs()) fail(ErrorCode::InvalidArgument, "mode set does not match the model");
  const SparseMatrix J = curvature_jacobian(mesh, mesh.rest_state());
  const StrainPath path = strain_path(J, mesh.rest_angles(), modes, indices, coefficients);
  Trajectory out = fold_path(model, path, options);
  out.mode_indices = indices;
  const double norm = Eigen::Map<const Eigen::VectorXd>(coefficients.data(), coefficients.size()).norm();
  for (double c : coefficients) out.coefficients.push_back(c / norm);
  return out;
}

Trajectory linear_mode_trajectory(const ShellModel& model, const ModeSet& modes, int i, const std::vector<double>& t_grid) {
  const TriMesh& mesh = model.mesh();
  const Eigen::VectorXd e = modes.mode(i);
  if (e.size() != model.dofs()) fail(ErrorCode::InvalidArgument, "mode set does not match the model");
  const CurvatureVector rest = mesh.rest_angles();
  Trajectory out;
  out.kind = "lm";
  out.mode_indices = {i};
  out.coefficients = {1.0};
  out.fingerprint = model.fingerprint();
  for (double t : t_grid) {
    TrajectoryStep step;
    step.t = t;
    step.x = mesh.rest_state() + t * e;
    try {
      step.report = model.energy(rest, step.x);
    } catch (const Error& err) {
      out.error = err.what();
      break;
    }
    step.actuated_energy = step.report.total;
    out.steps.push_back(std::move(step));
  }
  return out;
}

}  // namespace foldlab
