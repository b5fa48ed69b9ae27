// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <string>
#include <vector>

#include "foldlab/modal.hpp"
#include "foldlab/strain_space.hpp"

namespace foldlab {

enum class TilingKind { Translation, Reflection };

TilingKind parse_tiling_kind(const std::string& name);
std::string to_string(TilingKind kind);

/// Periodic boundary conditions for an axis-aligned rectangular sheet as an
/// affine map from reduced variables to full states.
///
/// Translation: every right (top) boundary vertex equals its left (bottom)
/// partner plus T_x (T_y); the top-right corner is a slave of both pairings.
/// Reduced variables are the master coordinates followed by T_x and T_y.
///
/// Reflection: left/right vertices lie on x = cx -+ a, bottom/top on
/// y = cy -+ b; the tangential in-plane coordinate of boundary vertices is
/// held at rest and z stays free (corners keep only z). The last two reduced
/// variables are a and b.
struct PeriodicReduction {
  TilingKind kind = TilingKind::Translation;
  AffineMap map;
  /// Translation pairings (master, slave) across x and across y.
  std::vector<std::array<int, 2>> pairs_x;
  std::vector<std::array<int, 2>> pairs_y;
  /// Reflection boundary sets.
  std::vector<int> left, right, bottom, top;
  Eigen::Vector2d center = Eigen::Vector2d::Zero();
  /// Index of T_x (translation, 3 entries) or a (reflection) in q; T_y or b follows.
  int period_index = 0;

  int dimension() const { return static_cast<int>(map.P.cols()); }
  State expand(const Eigen::VectorXd& q) const { return map.expand(q); }
  /// Least-squares inverse on the reduced variables; exact for states in range.
  Eigen::VectorXd restrict_state(const State& x) const;
  /// Period vectors of a state: (T_x, T_y) for translation, (2a, 0, 0) and
  /// (0, 2b, 0) for reflection.
  std::array<Eigen::Vector3d, 2> periods(const State& x) const;
};

/// Errors name the first boundary vertex without a partner.
PeriodicReduction build_translation_reduction(const TriMesh& mesh, double rel_tol = 1e-8);
PeriodicReduction build_reflection_reduction(const TriMesh& mesh, double rel_tol = 1e-8);
PeriodicReduction build_reduction(const TriMesh& mesh, TilingKind kind);

/// Pins removing the rigid motions left in the reduced space: 3-2-1 for
/// translation, the z coordinate of the center vertex for reflection.
std::vector<Pin> periodic_pins(const TriMesh& mesh, TilingKind kind, double weight);

/// Eigenpairs of (P^T H P, P^T M P) at rest; vectors live in the reduced space.
ModeSet periodic_modes(const PeriodicReduction& reduction, const ShellModel& model, int k,
                       const EigenOptions& options = {});

/// Expanded (full-space) displacement direction of reduced mode i.
Eigen::VectorXd expand_mode(const PeriodicReduction& reduction, const ModeSet& modes, int i);

/// Strain-space folding of a periodic mode, solved in the reduced variables.
Trajectory fold_periodic(const ShellModel& model, const PeriodicReduction& reduction, const ModeSet& modes, int i,
                         const FoldOptions& options);

/// Largest violation of the periodicity constraints of a state (meters).
double periodicity_error(const PeriodicReduction& reduction, const State& x);

/// nx by ny copies of the unit cell at state x, welded within 1e-9 m.
/// Reflection copies are mirrored with flipped triangle orientation.
TriMesh export_tiling(const TriMesh& mesh, const PeriodicReduction& reduction, const State& x, int nx, int ny);

}  // namespace foldlab
