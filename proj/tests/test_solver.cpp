// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "foldlab/modal.hpp"
#include "foldlab/scenes.hpp"
#include "foldlab/solver.hpp"
#include "support.hpp"

using namespace foldlab;

namespace {

/// f(x) = 1/2 x^T A x - b^T x with a sparse SPD A.
class Quadratic final : public Objective {
 public:
  Quadratic(SparseMatrix A, Eigen::VectorXd b) : A_(std::move(A)), b_(std::move(b)) {}
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

/// Quartic well sum (x_i^2 - 1)^2 + 0.1 x_i, infeasible for |x_i| > 3.
class Quartic final : public Objective {
 public:
  explicit Quartic(int n) : n_(n) {}
  int dimension() const override { return n_; }
  bool evaluate(const Eigen::VectorXd& x, double* f, Eigen::VectorXd* g, SparseMatrix* H) const override {
    if (x.cwiseAbs().maxCoeff() > 3.0) return false;
    if (f) *f = ((x.array().square() - 1.0).square() + 0.1 * x.array()).sum();
    if (g) *g = (4.0 * x.array() * (x.array().square() - 1.0) + 0.1).matrix();
    if (H) {
      H->resize(n_, n_);
      std::vector<Eigen::Triplet<double>> t;
      for (int i = 0; i < n_; ++i) t.emplace_back(i, i, 12.0 * x[i] * x[i] - 4.0);
      H->setFromTriplets(t.begin(), t.end());
    }
    return true;
  }
  double default_grad_tol() const override { return 1e-10; }

 private:
  int n_;
};

SparseMatrix random_spd(int n, std::mt19937& rng) {
  const Eigen::MatrixXd B = test::random_vector(n * n, 1.0, rng).reshaped(n, n);
  const Eigen::MatrixXd A = B * B.transpose() + n * Eigen::MatrixXd::Identity(n, n);
  return A.sparseView();
}

}  // namespace

TEST_CASE("quadratic model converges in one Newton iteration") {
  std::mt19937 rng(1);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 8 + trial;
    const SparseMatrix A = random_spd(n, rng);
    const Eigen::VectorXd b = test::random_vector(n, 1.0, rng);
    const Quadratic q(A, b);
    SolverConfig cfg;
    cfg.grad_tol = 1e-9;
    const SolveResult r = minimize(q, test::random_vector(n, 3.0, rng), cfg);
    CHECK(r.converged());
    CHECK(r.stats.iterations == 1);
    const Eigen::VectorXd exact = Eigen::MatrixXd(A).ldlt().solve(b);
    CHECK((r.x - exact).norm() < 1e-10 * exact.norm());
  }
}

TEST_CASE("converged start takes zero iterations") {
  const SparseMatrix A = Eigen::MatrixXd::Identity(3, 3).sparseView();
  const Quadratic q(A, Eigen::Vector3d(1, 2, 3));
  const SolveResult r = minimize(q, Eigen::Vector3d(1, 2, 3), SolverConfig{});
  CHECK(r.converged());
  CHECK(r.stats.iterations == 0);
}

TEST_CASE("indefinite Hessian is regularized and descent is monotone") {
  const Quartic q(6);
  Eigen::VectorXd x0(6);
  x0 << 0.01, -0.02, 0.3, -0.5, 0.0, 2.5;
  const SolveResult r = minimize(q, x0, SolverConfig{});
  CHECK(r.converged());
  CHECK(r.stats.regularizations_applied > 0);
  const auto& h = r.stats.energy_history;
  REQUIRE(h.size() >= 2);
  for (std::size_t k = 1; k < h.size(); ++k) CHECK(h[k] <= h[k - 1]);
  Eigen::VectorXd g;
  q.evaluate(r.x, nullptr, &g, nullptr);
  CHECK(g.cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("property: shell minimization descends monotonically from random starts") {
  std::mt19937 rng(3);
  const auto m = std::make_shared<const TriMesh>(make_square_sheet(0.2, 6));
  const ShellMaterial mat;
  PenaltySet p;
  p.pins = pins_321(*m, mat.youngs * mat.thickness);
  const ShellModel model(m, mat, p);
  for (int trial = 0; trial < 4; ++trial) {
    const CurvatureVector kbar = m->rest_angles() + test::random_vector(m->hinge_count(), 0.2, rng);
    const ShellObjective obj(model, kbar);
    const State x0 = m->rest_state() + test::random_vector(model.dofs(), 1e-3, rng);
    const SolveResult r = minimize(obj, x0, SolverConfig{});
    CHECK(r.converged());
    const auto& h = r.stats.energy_history;
    for (std::size_t k = 1; k < h.size(); ++k) CHECK(h[k] <= h[k - 1]);
    CHECK(r.stats.final_grad_norm <= model.default_grad_tol());
  }
}

TEST_CASE("iteration cap reports MaxIterations with the best iterate") {
  const Quartic q(3);
  SolverConfig cfg;
  cfg.max_newton_iters = 1;
  const SolveResult r = minimize(q, Eigen::Vector3d(2.5, -2.5, 0.2), cfg);
  CHECK(r.stats.status == SolveStatus::MaxIterations);
  double f0 = 0.0, f1 = 0.0;
  q.evaluate(Eigen::Vector3d(2.5, -2.5, 0.2), &f0, nullptr, nullptr);
  q.evaluate(r.x, &f1, nullptr, nullptr);
  CHECK(f1 <= f0);
  CHECK(to_string(r.stats.status) == "max_iterations");
}

TEST_CASE("line search never accepts infeasible points") {
  const Quartic q(2);
  const SolveResult r = minimize(q, Eigen::Vector2d(2.9, -2.9), SolverConfig{});
  CHECK(r.x.cwiseAbs().maxCoeff() <= 3.0);
  CHECK(r.converged());
}

TEST_CASE("affine reduction: gradient and Hessian are projected") {
  std::mt19937 rng(9);
  const SparseMatrix A = random_spd(6, rng);
  const Quadratic full(A, test::random_vector(6, 1.0, rng));
  const Eigen::MatrixXd Pd = test::random_vector(12, 1.0, rng).reshaped(6, 2);
  const SparseMatrix P = Pd.sparseView();
  const Eigen::VectorXd off = test::random_vector(6, 1.0, rng);
  const AffineReducedObjective red(full, P, off);
  const Eigen::Vector2d q(0.3, -0.7);
  double f = 0.0;
  Eigen::VectorXd g;
  SparseMatrix H;
  REQUIRE(red.evaluate(q, &f, &g, &H));
  const auto fq = [&](const Eigen::VectorXd& y) {
    double v = 0.0;
    full.evaluate(Pd * y + off, &v, nullptr, nullptr);
    return v;
  };
  CHECK((g - test::fd_gradient(fq, q, 1e-6)).norm() < 1e-6 * g.norm());
  CHECK((Eigen::MatrixXd(H) - Pd.transpose() * Eigen::MatrixXd(A) * Pd).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((red.expand(q) - (Pd * q + off)).norm() < 1e-15);
}

TEST_CASE("continuation warm-starts and stops at the first failure") {
  const Quartic q(2);
  const ObjectiveAt make = [](double, const Eigen::VectorXd&) {
    return std::make_unique<Quartic>(2);
  };
  int seen = 0;
  const auto steps = continuation(make, {0.0, 0.5, 1.0}, Eigen::Vector2d(0.9, -0.9), SolverConfig{},
                                  [&](const ContinuationStep&) { ++seen; });
  CHECK(steps.size() == 3);
  CHECK(seen == 3);
  CHECK(steps[1].stats.iterations == 0);
  CHECK(steps[2].stats.iterations == 0);

  SolverConfig tight;
  tight.max_newton_iters = 1;
  const auto partial = continuation(make, {0.0, 1.0, 2.0}, Eigen::Vector2d(2.5, -2.5), tight);
  CHECK(partial.size() == 1);
  CHECK(partial[0].stats.status != SolveStatus::Converged);
}

namespace {

// (x - t)^2, defined only within 0.6 of the warm start.
class Windowed final : public Objective {
 public:
  Windowed(double t, double center) : t_(t), center_(center) {}
  int dimension() const override { return 1; }
  bool evaluate(const Eigen::VectorXd& x, double* f, Eigen::VectorXd* g, SparseMatrix* H) const override {
    if (std::abs(x[0] - center_) > 0.6) return false;
    if (f) *f = (x[0] - t_) * (x[0] - t_);
    if (g) *g = Eigen::VectorXd::Constant(1, 2.0 * (x[0] - t_));
    if (H) {
      H->resize(1, 1);
      H->insert(0, 0) = 2.0;
    }
    return true;
  }
  double default_grad_tol() const override { return 1e-10; }

 private:
  double t_, center_;
};

}  // namespace

TEST_CASE("continuation halves a failing step and re-centers each sub-step") {
  const ObjectiveAt make = [](double t, const Eigen::VectorXd& x0) { return std::make_unique<Windowed>(t, x0[0]); };
  SolverConfig cfg;
  cfg.max_newton_iters = 50;
  const auto direct = continuation(make, {0.0, 1.0}, Eigen::VectorXd::Zero(1), cfg);
  REQUIRE(direct.size() == 2);
  CHECK(direct[1].stats.status != SolveStatus::Converged);

  int seen = 0;
  const auto halved = continuation(make, {0.0, 1.0, 2.0}, Eigen::VectorXd::Zero(1), cfg,
                                   [&](const ContinuationStep&) { ++seen; }, 2);
  REQUIRE(halved.size() == 3);
  CHECK(seen == 3);
  for (const auto& s : halved) CHECK(s.stats.status == SolveStatus::Converged);
  CHECK(halved[1].substeps == 2);
  CHECK(halved[2].substeps == 2);
  CHECK(halved[2].x[0] == doctest::Approx(2.0));
  CHECK(halved[1].stats.iterations > halved[1].stats.energy_history.size() - 1);
  CHECK_THROWS(continuation(make, {0.0, 1.0}, Eigen::VectorXd::Zero(1), cfg, {}, -1));
}
