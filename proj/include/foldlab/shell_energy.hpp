// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <memory>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "foldlab/mesh.hpp"

namespace foldlab {

using SparseMatrix = Eigen::SparseMatrix<double>;

struct ShellMaterial {
  double youngs = 2.9e9;   // Pa
  double poisson = 0.3;
  double thickness = 1e-3;  // m
  double density = 1.0;     // kg/m^3
  /// Per-hinge multiplier on bending stiffness; empty means 1 everywhere.
  std::vector<double> crease_scale;

  double lame_mu() const { return youngs / (2.0 * (1.0 + poisson)); }
  /// Plane-stress first Lame parameter.
  double lame_lambda() const { return youngs * poisson / (1.0 - poisson * poisson); }
  double bending_modulus() const {
    return youngs * thickness * thickness * thickness / (24.0 * (1.0 - poisson * poisson));
  }
};

struct Pin {
  int vertex = 0;
  std::array<bool, 3> mask{true, true, true};
  Eigen::Vector3d target = Eigen::Vector3d::Zero();
  double weight = 0.0;  // N/m
};

/// Zero-length spring between two vertices.
struct Spring {
  int a = 0;
  int b = 0;
  double weight = 0.0;  // N/m
};

struct BarrierSettings {
  bool enabled = false;
  double dhat = 0.0;       // m; <= 0 selects 1e-3 * mesh diagonal
  double stiffness = 0.0;  // <= 0 selects youngs * thickness^3
};

struct PenaltySet {
  std::vector<Pin> pins;
  std::vector<Spring> springs;
  BarrierSettings barrier;
};

struct EnergyReport {
  double total = 0.0;
  double membrane = 0.0;
  double bending = 0.0;
  double penalty = 0.0;
  double barrier = 0.0;
  double max_inplane_strain = 0.0;
  double mass_displacement = 0.0;
};

/// Three pins at the vertex nearest the centroid and two of its neighbours
/// removing exactly the six rigid-body motions of a sheet.
std::vector<Pin> pins_321(const TriMesh& mesh, double weight);

/// Discrete shell: constant-strain St. Venant-Kirchhoff membrane, hinge
/// bending against per-hinge rest angles, and penalty terms.
///
/// W = sum_t A_t h psi(E_t) + sum_h k_h (theta_h - kbar_h)^2 |e_h|^2 / (A_h / 3)
///     + pins + springs + barrier
///
/// The Hessian is exact (possibly indefinite) and assembled into a fixed
/// sparsity pattern; barrier pairs extend it when active.
class ShellModel {
 public:
  ShellModel(std::shared_ptr<const TriMesh> mesh, ShellMaterial material, PenaltySet penalties = {});

  const TriMesh& mesh() const { return *mesh_; }
  std::shared_ptr<const TriMesh> mesh_ptr() const { return mesh_; }
  const ShellMaterial& material() const { return material_; }
  const PenaltySet& penalties() const { return penalties_; }
  /// Lumped per-DOF mass (kg).
  const Eigen::VectorXd& mass() const { return mass_; }
  int dofs() const { return 3 * mesh_->vertex_count(); }

  ShellModel with_penalties(PenaltySet penalties) const;

  double hinge_stiffness(int h) const { return stiffness_[h]; }
  /// |e|^2 / (A/3) for hinge h at rest.
  double hinge_weight(int h) const { return hinge_weight_[h]; }
  double barrier_dhat() const { return penalties_.barrier.dhat; }
  double barrier_stiffness() const { return penalties_.barrier.stiffness; }

  /// Convergence scale 1e-8 * E * h * diagonal (N).
  double default_grad_tol() const;
  /// Material and penalty fingerprint combined with the mesh fingerprint.
  std::string fingerprint() const;

  /// Total energy is +inf when the barrier detects contact at d <= 0.
  /// Dihedral angles lie in (-pi, pi] unless a branch is given; then each
  /// angle is taken within pi of branch[h] (see tracked_curvatures).
  EnergyReport energy(const CurvatureVector& rest_angles, const State& x,
                      const CurvatureVector* branch = nullptr) const;
  Eigen::VectorXd gradient(const CurvatureVector& rest_angles, const State& x) const;
  SparseMatrix hessian(const CurvatureVector& rest_angles, const State& x) const;

  /// Combined evaluation for solvers. Returns false (and leaves outputs
  /// unspecified) if the state is infeasible: interpenetration or a
  /// degenerate hinge.
  bool evaluate(const CurvatureVector& rest_angles, const State& x, double* energy, Eigen::VectorXd* gradient,
                SparseMatrix* hessian, const CurvatureVector* branch = nullptr) const;

  /// d(grad_x W)/d(kbar_h) = -2 k_h w_h grad theta_h(x); returned as the
  /// product with a hinge-space vector v.
  Eigen::VectorXd mixed_derivative_times(const State& x, const Eigen::VectorXd& v) const;
  /// Transpose product: (d grad_x W / d kbar)^T u, one entry per hinge.
  Eigen::VectorXd mixed_derivative_transpose_times(const State& x, const Eigen::VectorXd& u) const;

 private:
  struct Parts;
  bool accumulate(const CurvatureVector& kbar, const State& x, Parts& parts, Eigen::VectorXd* grad,
                  SparseMatrix* hess, const CurvatureVector* branch = nullptr) const;
  void build_pattern();

  std::shared_ptr<const TriMesh> mesh_;
  ShellMaterial material_;
  PenaltySet penalties_;
  Eigen::VectorXd mass_;
  std::vector<double> stiffness_;
  std::vector<double> hinge_weight_;
  std::vector<Eigen::Matrix2d> rest_frame_inverse_;

  SparseMatrix pattern_;
  std::vector<int> triangle_slots_;  // 81 per triangle
  std::vector<int> hinge_slots_;     // 144 per hinge
  std::vector<int> spring_slots_;    // 36 per spring
  std::vector<int> pin_slots_;       // 3 per pin (diagonal)
};

CurvatureVector curvatures(const TriMesh& mesh, const State& x);
/// Dihedral angles unwrapped to lie within pi of branch, so an angle can be
/// followed continuously through +-pi along a sequence of nearby states.
CurvatureVector tracked_curvatures(const TriMesh& mesh, const State& x, const CurvatureVector& branch);

/// Largest-magnitude principal Green strain over all triangles.
double max_inplane_strain(const TriMesh& mesh, const State& x);

/// Gradient of the dihedral angle of hinge h with respect to its four
/// vertices (i, j, k, l), 12 entries.
Eigen::Matrix<double, 12, 1> dihedral_gradient(const TriMesh& mesh, const State& x, int h);

}  // namespace foldlab
