// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "foldlab/shell_energy.hpp"

namespace foldlab {

/// Smooth objective over a flat variable vector. `evaluate` returns false
/// for infeasible points, which the line search treats as infinite energy.
class Objective {
 public:
  virtual ~Objective() = default;
  virtual int dimension() const = 0;
  virtual bool evaluate(const Eigen::VectorXd& x, double* f, Eigen::VectorXd* g, SparseMatrix* H) const = 0;
  /// Gradient tolerance used when SolverConfig::grad_tol is not set.
  virtual double default_grad_tol() const { return 1e-8; }
  /// Called by minimize with every accepted iterate.
  virtual void accept(const Eigen::VectorXd& /*x*/) const {}
};

struct SolverConfig {
  /// Infinity-norm gradient tolerance (N); <= 0 selects the model default.
  double grad_tol = 0.0;
  int max_newton_iters = 200;
  /// Initial diagonal shift; <= 0 selects 1e-8 * trace(H) / dim.
  double reg_init = 0.0;
  double reg_growth = 10.0;
  double armijo_c = 1e-4;
  double backtrack_factor = 0.5;
  double min_step = 1e-12;
};

enum class SolveStatus { Converged, MaxIterations, LineSearchStalled };

std::string to_string(SolveStatus status);

struct SolveStats {
  SolveStatus status = SolveStatus::Converged;
  int iterations = 0;
  double final_grad_norm = 0.0;
  int regularizations_applied = 0;
  double wall_time_s = 0.0;
  /// Objective value after every accepted iterate, starting with x0.
  std::vector<double> energy_history;
};

struct SolveResult {
  Eigen::VectorXd x;
  double energy = 0.0;
  SolveStats stats;
  bool converged() const { return stats.status == SolveStatus::Converged; }
};

/// Newton's method with diagonal-shift regularization and Armijo
/// backtracking. The Hessian (plus tau I) must factor with strictly positive
/// pivots; otherwise tau grows by reg_growth. tau restarts every iteration.
/// Never throws for non-convergence: the status carries the outcome and x
/// is the best iterate.
SolveResult minimize(const Objective& objective, const Eigen::VectorXd& x0, const SolverConfig& config);

/// W(kbar, x) of a shell model as an Objective over full states.
/// With branch angles, dihedrals are unwrapped around them and the branch
/// follows every accepted iterate (see tracked_curvatures).
class ShellObjective final : public Objective {
 public:
  ShellObjective(const ShellModel& model, CurvatureVector rest_angles,
                 std::shared_ptr<CurvatureVector> branch = nullptr)
      : model_(model), kbar_(std::move(rest_angles)), branch_(std::move(branch)) {}
  int dimension() const override { return model_.dofs(); }
  bool evaluate(const Eigen::VectorXd& x, double* f, Eigen::VectorXd* g, SparseMatrix* H) const override {
    return model_.evaluate(kbar_, x, f, g, H, branch_.get());
  }
  double default_grad_tol() const override { return model_.default_grad_tol(); }
  void accept(const Eigen::VectorXd& x) const override {
    if (branch_) *branch_ = tracked_curvatures(model_.mesh(), x, *branch_);
  }

 private:
  const ShellModel& model_;
  CurvatureVector kbar_;
  std::shared_ptr<CurvatureVector> branch_;
};

/// Restriction of an objective to the affine family x = P q + offset.
class AffineReducedObjective final : public Objective {
 public:
  AffineReducedObjective(const Objective& full, SparseMatrix P, Eigen::VectorXd offset)
      : full_(full), P_(std::move(P)), PT_(P_.transpose()), offset_(std::move(offset)) {}
  int dimension() const override { return static_cast<int>(P_.cols()); }
  bool evaluate(const Eigen::VectorXd& q, double* f, Eigen::VectorXd* g, SparseMatrix* H) const override;
  double default_grad_tol() const override { return full_.default_grad_tol(); }
  void accept(const Eigen::VectorXd& q) const override { full_.accept(expand(q)); }
  Eigen::VectorXd expand(const Eigen::VectorXd& q) const { return P_ * q + offset_; }

 private:
  const Objective& full_;
  SparseMatrix P_;
  SparseMatrix PT_;
  Eigen::VectorXd offset_;
};

/// Outcome of one continuation step. With sub-steps, stats are those of the
/// last solve except iterations, regularizations and wall time, which are
/// summed over every attempt.
struct ContinuationStep {
  double t = 0.0;
  Eigen::VectorXd x;
  SolveStats stats;
  int substeps = 1;
};

/// Builds the objective at parameter t for a solve warm-started at x_start.
using ObjectiveAt = std::function<std::unique_ptr<Objective>(double t, const Eigen::VectorXd& x_start)>;

/// Warm-started sequence of minimizations over a strictly monotone t_grid.
/// A step that does not converge is retried through the midpoint of its
/// interval, recursively up to max_halvings times. Stops at the first step
/// that still fails; that step is recorded. `on_step` sees every recorded step.
std::vector<ContinuationStep> continuation(const ObjectiveAt& objective_at, const std::vector<double>& t_grid,
                                           const Eigen::VectorXd& x_init, const SolverConfig& config,
                                           const std::function<void(const ContinuationStep&)>& on_step = {},
                                           int max_halvings = 0);

}  // namespace foldlab
