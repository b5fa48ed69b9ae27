// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "foldlab/modal.hpp"
#include "foldlab/solver.hpp"
#include "foldlab/strain_space.hpp"

namespace foldlab {

struct Sphere {
  Eigen::Vector3d center = Eigen::Vector3d::Zero();
  double radius = 0.0;
};

/// sum_v max(0, |x_v - center| - r)^2 (m^2); optional gradient.
double sphere_objective(const State& x, const Sphere& sphere, Eigen::VectorXd* gradient = nullptr);

/// Largest |x_v - center| - r over all vertices (m); negative when strictly inside.
double sphere_excess(const State& x, const Sphere& sphere);

/// Scalar design objective on states with its gradient.
using DesignObjective = std::function<double(const State& x, Eigen::VectorXd* gradient)>;

DesignObjective sphere_design_objective(const Sphere& sphere);

struct SubspaceSolution {
  State x;
  EnergyReport report;
  SolveStats stats;
  bool converged() const { return stats.status == SolveStatus::Converged; }
};

struct DesignGradient {
  Eigen::VectorXd value;
  /// True if the Hessian needed a diagonal shift to factor.
  bool regularized = false;
};

/// Nonlinear subspace x*(c) = argmin_x W(kbar0 + sum_j c_j J e_j, x) over a
/// fixed list of modes, with adjoint gradients of a design objective.
class SubspaceProblem {
 public:
  SubspaceProblem(const ShellModel& model, const ModeSet& modes, std::vector<int> mode_indices,
                  DesignObjective objective, SolverConfig solver = {});

  int size() const { return static_cast<int>(indices_.size()); }
  const std::vector<int>& mode_indices() const { return indices_; }
  const ShellModel& model() const { return model_; }
  /// Hinge-space directions J e_j, one column per mode.
  const Eigen::MatrixXd& directions() const { return directions_; }
  CurvatureVector curvatures(const Eigen::VectorXd& c) const;

  SubspaceSolution solve(const Eigen::VectorXd& c, const State& warm) const;
  double objective(const State& x, Eigen::VectorXd* gradient = nullptr) const { return objective_(x, gradient); }
  /// dO/dc at an equilibrium x of c: H lambda = grad O,
  /// dO/dc_j = -lambda^T (d grad_x W / d kbar) J e_j.
  DesignGradient gradient(const Eigen::VectorXd& c, const State& x) const;

 private:
  const ShellModel& model_;
  std::vector<int> indices_;
  DesignObjective objective_;
  SolverConfig solver_;
  CurvatureVector rest_;
  Eigen::MatrixXd directions_;
};

struct InverseOptions {
  int max_iters = 200;
  double step_tol = 1e-10;
  /// Relative to the gradient norm at the start.
  double grad_tol = 1e-8;
  /// Stop once the objective reaches this value (m^2).
  double objective_tol = 1e-12;
  int history = 10;
  /// Weight of |c|^2 added to the objective.
  double regularization = 0.0;
  /// The first step changes some hinge target by this many radians.
  double initial_angle_step = 0.2;
  /// Cap on the hinge-target change of any step (radians).
  double max_angle_step = 0.5;
  int max_backtracks = 30;
  double armijo_c = 1e-4;
};

struct InverseIterate {
  int iteration = 0;
  double objective = 0.0;
  double grad_norm = 0.0;
  double step_norm = 0.0;
  int solves = 0;
  double wall_time_s = 0.0;
};

struct InverseResult {
  Eigen::VectorXd c;
  State x;
  std::vector<InverseIterate> history;
  /// "objective", "gradient", "step", "max_iterations" or "line_search".
  std::string stop_reason;
  bool adjoint_regularized = false;
};

/// Limited-memory BFGS over c with Armijo backtracking on the objective.
/// A failed equilibrium solve counts as an infinite objective.
InverseResult optimize_design(const SubspaceProblem& problem, const InverseOptions& options,
                              const std::function<void(const InverseIterate&)>& on_iterate = {});

/// Shrinking-sphere demo: minimize W(kbar0, x) + weight * sphere_objective
/// for each radius in turn, warm-started. Returns one state per radius; stops
/// at the first radius whose solve does not converge.
std::vector<State> crumple_into_sphere(const ShellModel& model, const Eigen::Vector3d& center,
                                       const std::vector<double>& radii, double weight, const SolverConfig& solver);

}  // namespace foldlab
