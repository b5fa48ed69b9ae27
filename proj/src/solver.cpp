// SPDX-License-Identifier: Apache-2.0
#include "foldlab/solver.hpp"

#include <chrono>
#include <cmath>
#include <limits>

#include <Eigen/SparseCholesky>

#include "foldlab/error.hpp"

namespace foldlab {

namespace {

constexpr int kMaxRegularizationAttempts = 60;

double inf_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Converged:
      return "converged";
    case SolveStatus::MaxIterations:
      return "max_iterations";
    case SolveStatus::LineSearchStalled:
      return "line_search_stalled";
  }
  return "unknown";
}

SolveResult minimize(const Objective& objective, const Eigen::VectorXd& x0, const SolverConfig& config) {
  if (x0.size() != objective.dimension()) fail(ErrorCode::InvalidArgument, "initial state has the wrong dimension");
  if (!x0.allFinite()) fail(ErrorCode::InvalidArgument, "initial state is not finite");
  if (!(config.backtrack_factor > 0 && config.backtrack_factor < 1) || !(config.reg_growth > 1)) {
    fail(ErrorCode::InvalidArgument, "solver config: backtrack_factor must be in (0, 1) and reg_growth > 1");
  }
  const auto started = std::chrono::steady_clock::now();
  const double tol = config.grad_tol > 0 ? config.grad_tol : objective.default_grad_tol();

  SolveResult out;
  out.x = x0;
  Eigen::VectorXd g;
  SparseMatrix H;
  if (!objective.evaluate(out.x, &out.energy, &g, &H)) {
    fail(ErrorCode::Solver, "initial state is infeasible (interpenetrating or degenerate)");
  }
  auto& st = out.stats;
  st.energy_history.push_back(out.energy);
  st.status = SolveStatus::MaxIterations;

  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  Eigen::Index analyzed_nnz = -1;
  const int n = objective.dimension();

  for (;;) {
    const double gnorm = inf_norm(g);
    if (gnorm <= tol) {
      st.status = SolveStatus::Converged;
      break;
    }
    if (st.iterations >= config.max_newton_iters) break;

    // Regularized Newton direction.
    const double tau0 = config.reg_init > 0 ? config.reg_init : std::max(1e-300, 1e-8 * std::abs(H.diagonal().sum()) / n);
    double tau = 0.0;
    Eigen::VectorXd d;
    bool have_direction = false;
    for (int attempt = 0; attempt < kMaxRegularizationAttempts; ++attempt) {
      SparseMatrix K = H;
      if (tau > 0) {
        for (int i = 0; i < n; ++i) K.coeffRef(i, i) += tau;
      }
      K.makeCompressed();
      if (K.nonZeros() != analyzed_nnz) {
        ldlt.analyzePattern(K);
        analyzed_nnz = K.nonZeros();
      }
      ldlt.factorize(K);
      const bool ok = ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0).all();
      if (ok) {
        d = -ldlt.solve(g);
        if (d.allFinite() && g.dot(d) < 0) {
          have_direction = true;
          break;
        }
      }
      tau = tau > 0 ? tau * config.reg_growth : tau0;
      ++st.regularizations_applied;
    }
    if (!have_direction) {
      d = -g;
    }

    // Backtracking line search; infeasible trials count as +inf.
    const double slope = g.dot(d);
    double alpha = 1.0;
    bool accepted = false;
    Eigen::VectorXd x_trial;
    double f_trial = 0.0;
    while (alpha >= config.min_step) {
      x_trial = out.x + alpha * d;
      const bool feasible = objective.evaluate(x_trial, &f_trial, nullptr, nullptr) && std::isfinite(f_trial);
      if (feasible && f_trial <= out.energy + config.armijo_c * alpha * slope) {
        accepted = true;
        break;
      }
      if (feasible && alpha == 1.0 && f_trial <= out.energy) {
        // Energy differences at roundoff level: accept the full step if it
        // still reduces the gradient.
        Eigen::VectorXd g_trial;
        double f_check = 0.0;
        if (objective.evaluate(x_trial, &f_check, &g_trial, nullptr) && inf_norm(g_trial) < gnorm) {
          accepted = true;
          break;
        }
      }
      alpha *= config.backtrack_factor;
    }
    if (!accepted) {
      st.status = SolveStatus::LineSearchStalled;
      break;
    }
    out.x = std::move(x_trial);
    objective.accept(out.x);
    ++st.iterations;
    if (!objective.evaluate(out.x, &out.energy, &g, &H)) {
      fail(ErrorCode::Internal, "accepted iterate became infeasible on re-evaluation");
    }
    st.energy_history.push_back(out.energy);
  }
  st.final_grad_norm = inf_norm(g);
  st.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  return out;
}

bool AffineReducedObjective::evaluate(const Eigen::VectorXd& q, double* f, Eigen::VectorXd* g, SparseMatrix* H) const {
  const Eigen::VectorXd x = expand(q);
  Eigen::VectorXd gf;
  SparseMatrix Hf;
  if (!full_.evaluate(x, f, g ? &gf : nullptr, H ? &Hf : nullptr)) return false;
  if (g) *g = PT_ * gf;
  if (H) {
    *H = PT_ * Hf * P_;
    H->makeCompressed();
  }
  return true;
}

std::vector<ContinuationStep> continuation(const ObjectiveAt& objective_at, const std::vector<double>& t_grid,
                                           const Eigen::VectorXd& x_init, const SolverConfig& config,
                                           const std::function<void(const ContinuationStep&)>& on_step,
                                           int max_halvings) {
  // Decreasing grids are allowed so a path can be retraced.
  for (std::size_t i = 2; i < t_grid.size(); ++i) {
    if (!((t_grid[i] - t_grid[i - 1]) * (t_grid[1] - t_grid[0]) > 0)) {
      fail(ErrorCode::InvalidArgument, "continuation grid must be strictly monotone");
    }
  }
  if (t_grid.size() == 2 && t_grid[0] == t_grid[1]) fail(ErrorCode::InvalidArgument, "continuation grid must be strictly monotone");
  if (max_halvings < 0) fail(ErrorCode::InvalidArgument, "max_halvings must be non-negative");

  std::vector<ContinuationStep> steps;
  Eigen::VectorXd x = x_init;
  for (std::size_t i = 0; i < t_grid.size(); ++i) {
    ContinuationStep step;
    step.t = t_grid[i];
    step.substeps = 0;
    int iterations = 0, regularizations = 0;
    double wall = 0.0;
    const std::function<bool(double, double, int)> advance = [&](double t0, double t1, int depth) {
      const auto objective = objective_at(t1, x);
      SolveResult r = minimize(*objective, x, config);
      iterations += r.stats.iterations;
      regularizations += r.stats.regularizations_applied;
      wall += r.stats.wall_time_s;
      if (r.converged()) {
        x = std::move(r.x);
        step.stats = std::move(r.stats);
        ++step.substeps;
        return true;
      }
      if (depth < max_halvings && i > 0) {
        const double mid = 0.5 * (t0 + t1);
        return advance(t0, mid, depth + 1) && advance(mid, t1, depth + 1);
      }
      step.x = std::move(r.x);
      step.stats = std::move(r.stats);
      return false;
    };
    const bool ok = advance(i == 0 ? t_grid[0] : t_grid[i - 1], t_grid[i], 0);
    if (ok) step.x = x;
    step.stats.iterations = iterations;
    step.stats.regularizations_applied = regularizations;
    step.stats.wall_time_s = wall;
    steps.push_back(std::move(step));
    if (on_step) on_step(steps.back());
    if (!ok) break;
  }
  return steps;
}

}  // namespace foldlab
