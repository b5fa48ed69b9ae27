// SPDX-License-Identifier: Apache-2.0
#include "foldlab/inverse.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <limits>

#include <Eigen/SparseCholesky>

#include "foldlab/error.hpp"

namespace foldlab {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

class PenalizedShellObjective final : public Objective {
 public:
  PenalizedShellObjective(const ShellModel& model, const Sphere& sphere, double weight)
      : model_(model), kbar_(model.mesh().rest_angles()), sphere_(sphere), weight_(weight) {}
  int dimension() const override { return model_.dofs(); }
  double default_grad_tol() const override { return model_.default_grad_tol(); }
  bool evaluate(const Eigen::VectorXd& x, double* f, Eigen::VectorXd* g, SparseMatrix* H) const override {
    if (!model_.evaluate(kbar_, x, f, g, H)) return false;
    const int n = model_.mesh().vertex_count();
    std::vector<Eigen::Triplet<double>> trip;
    for (int v = 0; v < n; ++v) {
      const Eigen::Vector3d d = vertex_of(x, v) - sphere_.center;
      const double r = d.norm();
      const double excess = r - sphere_.radius;
      if (excess <= 0) continue;
      const Eigen::Vector3d u = d / r;
      if (f) *f += weight_ * excess * excess;
      if (g) g->segment<3>(3 * v) += 2 * weight_ * excess * u;
      if (H) {
        // d^2/dx^2 (r - R)^2 = 2 u u^T + 2 (r - R)/r (I - u u^T)
        const Eigen::Matrix3d uu = u * u.transpose();
        const Eigen::Matrix3d block =
            2 * weight_ * (uu + excess / r * (Eigen::Matrix3d::Identity() - uu));
        for (int a = 0; a < 3; ++a)
          for (int b = 0; b < 3; ++b) trip.emplace_back(3 * v + a, 3 * v + b, block(a, b));
      }
    }
    if (H && !trip.empty()) {
      SparseMatrix extra(H->rows(), H->cols());
      extra.setFromTriplets(trip.begin(), trip.end());
      *H += extra;
    }
    return true;
  }

 private:
  const ShellModel& model_;
  CurvatureVector kbar_;
  Sphere sphere_;
  double weight_;
};

}  // namespace

double sphere_objective(const State& x, const Sphere& sphere, Eigen::VectorXd* gradient) {
  if (!(sphere.radius > 0)) fail(ErrorCode::InvalidArgument, "sphere radius must be positive");
  if (x.size() % 3 != 0) fail(ErrorCode::InvalidArgument, "state size must be a multiple of 3");
  if (gradient) gradient->setZero(x.size());
  double o = 0.0;
  for (Eigen::Index v = 0; v < x.size() / 3; ++v) {
    const Eigen::Vector3d d = x.segment<3>(3 * v) - sphere.center;
    const double r = d.norm();
    const double excess = r - sphere.radius;
    if (excess <= 0) continue;
    o += excess * excess;
    if (gradient) gradient->segment<3>(3 * v) = 2 * excess * d / r;
  }
  return o;
}

double sphere_excess(const State& x, const Sphere& sphere) {
  double worst = -std::numeric_limits<double>::infinity();
  for (Eigen::Index v = 0; v < x.size() / 3; ++v)
    worst = std::max(worst, (x.segment<3>(3 * v) - sphere.center).norm() - sphere.radius);
  return worst;
}

DesignObjective sphere_design_objective(const Sphere& sphere) {
  if (!(sphere.radius > 0)) fail(ErrorCode::InvalidArgument, "sphere radius must be positive");
  return [sphere](const State& x, Eigen::VectorXd* g) { return sphere_objective(x, sphere, g); };
}

SubspaceProblem::SubspaceProblem(const ShellModel& model, const ModeSet& modes, std::vector<int> mode_indices,
                                 DesignObjective objective, SolverConfig solver)
    : model_(model), indices_(std::move(mode_indices)), objective_(std::move(objective)), solver_(solver) {
  if (indices_.empty()) fail(ErrorCode::InvalidArgument, "inverse design needs at least one mode");
  if (modes.vectors.rows() != model.dofs()) fail(ErrorCode::InvalidArgument, "mode set does not match the model");
  for (int i : indices_) {
    if (i < 0 || i >= modes.size()) fail(ErrorCode::InvalidArgument, "mode index " + std::to_string(i) + " out of range");
  }
  const TriMesh& mesh = model.mesh();
  rest_ = mesh.rest_angles();
  const SparseMatrix J = curvature_jacobian(mesh, mesh.rest_state());
  directions_.resize(mesh.hinge_count(), size());
  for (int j = 0; j < size(); ++j) directions_.col(j) = J * modes.vectors.col(indices_[j]);
}

CurvatureVector SubspaceProblem::curvatures(const Eigen::VectorXd& c) const {
  if (c.size() != size()) fail(ErrorCode::InvalidArgument, "coefficient vector has the wrong length");
  return rest_ + directions_ * c;
}

SubspaceSolution SubspaceProblem::solve(const Eigen::VectorXd& c, const State& warm) const {
  const CurvatureVector kbar = curvatures(c);
  const ShellObjective obj(model_, kbar);
  SolveResult r = minimize(obj, warm, solver_);
  SubspaceSolution out;
  out.x = std::move(r.x);
  out.stats = std::move(r.stats);
  out.report = model_.energy(kbar, out.x);
  return out;
}

DesignGradient SubspaceProblem::gradient(const Eigen::VectorXd& c, const State& x) const {
  DesignGradient out;
  Eigen::VectorXd gO;
  objective_(x, &gO);
  out.value = Eigen::VectorXd::Zero(size());
  if (gO.size() != x.size()) fail(ErrorCode::InvalidArgument, "design objective returned a gradient of the wrong size");
  if (gO.lpNorm<Eigen::Infinity>() == 0.0) return out;

  const SparseMatrix H = model_.hessian(curvatures(c), x);
  Eigen::SimplicialLDLT<SparseMatrix> ldlt;
  const double tau0 = 1e-8 * std::abs(H.diagonal().sum()) / H.rows();
  double tau = 0.0;
  SparseMatrix I(H.rows(), H.cols());
  I.setIdentity();
  for (int attempt = 0; attempt < 60; ++attempt) {
    ldlt.compute(tau > 0 ? SparseMatrix(H + tau * I) : H);
    if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0).all()) break;
    tau = tau > 0 ? 10 * tau : tau0;
    out.regularized = true;
  }
  if (ldlt.info() != Eigen::Success) fail(ErrorCode::Solver, "adjoint system could not be factorized");
  const Eigen::VectorXd lambda = ldlt.solve(gO);
  out.value = -directions_.transpose() * model_.mixed_derivative_transpose_times(x, lambda);
  return out;
}

InverseResult optimize_design(const SubspaceProblem& problem, const InverseOptions& options,
                              const std::function<void(const InverseIterate&)>& on_iterate) {
  if (options.max_iters < 0 || options.history < 1) fail(ErrorCode::InvalidArgument, "invalid optimizer settings");
  const auto t0 = Clock::now();
  const int m = problem.size();
  const double reg = options.regularization;

  InverseResult res;
  res.c = Eigen::VectorXd::Zero(m);
  res.x = problem.model().mesh().rest_state();

  const auto total = [&](const Eigen::VectorXd& c, const State& x) { return problem.objective(x) + reg * c.squaredNorm(); };
  const auto total_grad = [&](const Eigen::VectorXd& c, const State& x) {
    DesignGradient g = problem.gradient(c, x);
    res.adjoint_regularized = res.adjoint_regularized || g.regularized;
    return Eigen::VectorXd(g.value + 2 * reg * c);
  };

  double f = total(res.c, res.x);
  Eigen::VectorXd g = total_grad(res.c, res.x);
  const double g0 = std::max(g.lpNorm<Eigen::Infinity>(), std::numeric_limits<double>::min());
  int solves = 0;
  const auto record = [&](int it, double step) {
    InverseIterate rec{it, f, g.lpNorm<Eigen::Infinity>(), step, solves, seconds_since(t0)};
    res.history.push_back(rec);
    if (on_iterate) on_iterate(rec);
  };
  record(0, 0.0);

  std::deque<std::pair<Eigen::VectorXd, Eigen::VectorXd>> pairs;
  const Eigen::MatrixXd& D = problem.directions();
  for (int it = 1;; ++it) {
    if (f <= options.objective_tol) {
      res.stop_reason = "objective";
      break;
    }
    if (g.lpNorm<Eigen::Infinity>() <= options.grad_tol * g0 && it > 1) {
      res.stop_reason = "gradient";
      break;
    }
    if (g.lpNorm<Eigen::Infinity>() == 0.0) {
      res.stop_reason = "gradient";
      break;
    }
    if (it > options.max_iters) {
      res.stop_reason = "max_iterations";
      break;
    }
    // Two-loop recursion.
    Eigen::VectorXd d = -g;
    std::vector<double> alpha(pairs.size());
    for (int k = static_cast<int>(pairs.size()) - 1; k >= 0; --k) {
      const auto& [s, y] = pairs[k];
      alpha[k] = s.dot(d) / y.dot(s);
      d -= alpha[k] * y;
    }
    if (!pairs.empty()) d *= pairs.back().first.dot(pairs.back().second) / pairs.back().second.squaredNorm();
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      const auto& [s, y] = pairs[k];
      const double beta = y.dot(d) / y.dot(s);
      d += (alpha[k] - beta) * s;
    }
    if (d.dot(g) >= 0) {
      pairs.clear();
      d = -g;
    }
    const double angle = (D * d).lpNorm<Eigen::Infinity>();
    double step = 1.0;
    if (pairs.empty()) step = angle > 0 ? options.initial_angle_step / angle : 1.0;
    if (angle * step > options.max_angle_step) step = options.max_angle_step / angle;

    const double slope = g.dot(d);
    bool accepted = false;
    Eigen::VectorXd c_new;
    SubspaceSolution sol;
    double f_new = 0.0;
    for (int bt = 0; bt <= options.max_backtracks; ++bt, step *= 0.5) {
      c_new = res.c + step * d;
      sol = problem.solve(c_new, res.x);
      ++solves;
      if (!sol.converged()) continue;
      f_new = total(c_new, sol.x);
      if (f_new <= f + options.armijo_c * step * slope) {
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      res.stop_reason = "line_search";
      break;
    }
    const Eigen::VectorXd s = c_new - res.c;
    const Eigen::VectorXd g_new = total_grad(c_new, sol.x);
    const Eigen::VectorXd y = g_new - g;
    if (s.dot(y) > 1e-12 * s.norm() * y.norm()) {
      pairs.emplace_back(s, y);
      if (static_cast<int>(pairs.size()) > options.history) pairs.pop_front();
    }
    res.c = c_new;
    res.x = std::move(sol.x);
    f = f_new;
    g = g_new;
    record(it, s.norm());
    if (s.lpNorm<Eigen::Infinity>() <= options.step_tol) {
      res.stop_reason = "step";
      break;
    }
  }
  return res;
}

std::vector<State> crumple_into_sphere(const ShellModel& model, const Eigen::Vector3d& center,
                                       const std::vector<double>& radii, double weight, const SolverConfig& solver) {
  if (!(weight > 0)) fail(ErrorCode::InvalidArgument, "sphere weight must be positive");
  std::vector<State> out;
  State x = model.mesh().rest_state();
  for (double r : radii) {
    if (!(r > 0)) fail(ErrorCode::InvalidArgument, "sphere radius must be positive");
    const PenalizedShellObjective obj(model, Sphere{center, r}, weight);
    SolveResult res = minimize(obj, x, solver);
    if (!res.converged()) break;
    x = res.x;
    out.push_back(x);
  }
  return out;
}

}  // namespace foldlab
