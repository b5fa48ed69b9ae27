// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "foldlab/mesh.hpp"

namespace foldlab {

/// Two triangles sharing the diagonal of a square of the given side.
TriMesh make_hinge_mesh(double side = 0.1);

/// Axis-aligned rectangle centered at the origin, nx by ny cells, two
/// triangles per cell. `flip(i, j)` picks the (i+1,j)-(i,j+1) diagonal for
/// cell (i, j) instead of (i,j)-(i+1,j+1).
TriMesh make_grid(double width, double height, int nx, int ny, const std::function<bool(int, int)>& flip);

/// Square sheet with alternating cell diagonals, invariant under the
/// symmetries of the square when `cells` is even.
TriMesh make_square_sheet(double side, int cells);

/// Disc of concentric rings; ring r carries 6r vertices.
TriMesh make_disc(double radius, int rings);

/// Straight crease line segment in the rest plane.
struct CreaseSegment {
  Eigen::Vector3d a;
  Eigen::Vector3d b;
};

/// Hinges whose two edge vertices both lie within `tol` of one of the segments.
std::vector<int> hinges_on_segments(const TriMesh& mesh, const std::vector<CreaseSegment>& segments, double tol);

/// 3x3 panel sheet of side 3 * panel; each panel has `cells` grid cells per
/// side. Edge and corner panels use one diagonal direction throughout so
/// that panel diagonals are mesh lines.
TriMesh make_origami_sheet(double panel, int cells);

/// Twist pattern on the 3x3 panel sheet: the center square outline plus one
/// diagonal in each edge panel, arranged as a pinwheel.
std::vector<CreaseSegment> origami_twist_creases(double panel);

/// Disc with six lens-shaped petal holes of the six-fold rosette.
TriMesh make_life_flower(double radius, int rings);

}  // namespace foldlab
