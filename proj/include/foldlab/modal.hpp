// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "foldlab/mesh.hpp"
#include "foldlab/shell_energy.hpp"

namespace foldlab {

/// Ascending generalized eigenpairs of (H, M); eigenvectors are
/// M-orthonormal columns with the largest-magnitude entry positive.
struct ModeSet {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd vectors;

  int size() const { return static_cast<int>(eigenvalues.size()); }
  Eigen::VectorXd mode(int i) const;
};

/// Per-DOF lumped mass: density * thickness * (1/3) of incident rest areas.
Eigen::VectorXd lumped_mass(const TriMesh& mesh, const ShellMaterial& material);

enum class EigenMethod { Auto, Dense, ShiftInvert };

struct EigenOptions {
  EigenMethod method = EigenMethod::Auto;
  /// Below this many DOFs Auto uses the dense solver.
  int dense_threshold = 1500;
  double shift = 0.0;
  double tolerance = 1e-10;
  int max_iterations = 500;
  unsigned seed = 12345;
};

/// k smallest eigenpairs of H e = lambda M e.
///
/// The shift-invert path factorizes H - shift * M once and runs block
/// subspace iteration with Rayleigh-Ritz; a singular factorization is
/// reported as a Solver error asking for pins.
ModeSet eigenmodes(const SparseMatrix& H, const SparseMatrix& M, int k, const EigenOptions& options = {});
ModeSet eigenmodes(const SparseMatrix& H, const Eigen::VectorXd& mass_diagonal, int k,
                   const EigenOptions& options = {});

/// Modes of the model's Hessian at the rest state with rest angles.
ModeSet rest_modes(const ShellModel& model, int k, const EigenOptions& options = {});

/// Share of a mode's M-norm carried by displacement along the rest vertex normals.
double normal_fraction(const TriMesh& mesh, const Eigen::VectorXd& mass, const Eigen::VectorXd& mode);

/// Share of a mode's M-norm inside the span of the six rigid motions.
double rigid_fraction(const TriMesh& mesh, const Eigen::VectorXd& mass, const Eigen::VectorXd& mode);

/// Indices of modes whose rigid fraction is below one half, ascending.
std::vector<int> nonrigid_modes(const TriMesh& mesh, const Eigen::VectorXd& mass, const ModeSet& modes);

/// Single file: one JSON header line, then eigenvectors as little-endian
/// float64, column-major.
void save_modes(const ModeSet& modes, int vertex_count, const std::filesystem::path& path);
ModeSet load_modes(const std::filesystem::path& path);

}  // namespace foldlab
