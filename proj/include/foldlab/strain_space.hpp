// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "foldlab/modal.hpp"
#include "foldlab/shell_energy.hpp"
#include "foldlab/solver.hpp"

namespace foldlab {

/// Sparse d(theta)/dx, one row per hinge with the 12 entries of its four vertices.
SparseMatrix curvature_jacobian(const TriMesh& mesh, const State& x);

/// kbar(t) = kbar0 + t * direction, with direction = sum_j c_j J e_j.
class StrainPath {
 public:
  StrainPath(CurvatureVector rest, Eigen::VectorXd direction);
  CurvatureVector at(double t) const { return rest_ + t * direction_; }
  const CurvatureVector& rest() const { return rest_; }
  const Eigen::VectorXd& direction() const { return direction_; }
  /// Largest t >= 0 keeping every |kbar_h(t)| <= limit.
  double default_t_max(double limit) const;

 private:
  CurvatureVector rest_;
  Eigen::VectorXd direction_;
};

/// Path for a unit combination of modes; `coefficients` is normalized to
/// unit length. A single index with coefficient 1 gives the one-mode path.
StrainPath strain_path(const SparseMatrix& J, const CurvatureVector& rest, const ModeSet& modes,
                       const std::vector<int>& indices, const std::vector<double>& coefficients);

/// sqrt(1/2 (x - X)^T M (x - X)) with lumped diagonal M.
double mass_displacement(const Eigen::VectorXd& mass, const State& rest, const State& x);

/// Default hinge-angle ceiling for t_max.
inline constexpr double kDefaultAngleLimit = 0.9 * 3.14159265358979323846;

/// Optional restriction of the solve to x = P q + offset; q_rest maps to
/// the rest state.
struct AffineMap {
  SparseMatrix P;
  Eigen::VectorXd offset;
  Eigen::VectorXd q_rest;
  Eigen::VectorXd expand(const Eigen::VectorXd& q) const { return P * q + offset; }
};

struct TrajectoryStep {
  double t = 0.0;
  State x;
  /// Physical energy against the rest curvatures of the unfolded sheet.
  EnergyReport report;
  /// Minimized objective W(kbar(t), x); equals report.total for linear modes.
  double actuated_energy = 0.0;
  SolveStats stats;
  /// Solves the step took after halving (1 if it converged directly).
  int substeps = 1;
};

struct Trajectory {
  std::string kind;  // "ssm", "lm" or "periodic"
  std::vector<int> mode_indices;
  std::vector<double> coefficients;
  std::string fingerprint;
  std::vector<TrajectoryStep> steps;
  /// Non-empty if the path stopped early; steps hold the part that was solved.
  std::string error;
  bool complete() const { return error.empty(); }
};

struct FoldOptions {
  /// Negative selects StrainPath::default_t_max(kDefaultAngleLimit).
  double t_max = -1.0;
  int steps = 10;
  SolverConfig solver;
  /// A step that fails is retried in up to 2^max_step_halvings sub-steps.
  int max_step_halvings = 4;
  /// Called with every converged step as soon as it is solved.
  std::function<void(const TrajectoryStep&)> on_step;
};

/// Warm-started continuation along kbar(t) over linspace(0, t_max, steps + 1).
Trajectory fold_path(const ShellModel& model, const StrainPath& path, const FoldOptions& options,
                     const AffineMap* map = nullptr);

/// Strain-space mode i at the rest state of `model`.
Trajectory fold_mode(const ShellModel& model, const ModeSet& modes, int i, const FoldOptions& options);

/// Blended strain-space mode along the unit coefficient direction.
Trajectory fold_blend(const ShellModel& model, const ModeSet& modes, const std::vector<int>& indices,
                      const std::vector<double>& coefficients, const FoldOptions& options);

/// X + t e_i with energies evaluated at rest curvatures, no solving.
Trajectory linear_mode_trajectory(const ShellModel& model, const ModeSet& modes, int i,
                                  const std::vector<double>& t_grid);

/// Evenly spaced grid 0, t_max / steps, ..., t_max (a single 0 if t_max is 0).
std::vector<double> linspace_grid(double t_max, int steps);

}  // namespace foldlab
