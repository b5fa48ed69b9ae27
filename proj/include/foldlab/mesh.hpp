// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <array>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace foldlab {

/// Flat vertex coordinates, length 3 * vertex count (meters).
using State = Eigen::VectorXd;

/// Per-hinge dihedral angles (radians).
using CurvatureVector = Eigen::VectorXd;

/// Interior edge (i, j), i < j, with the opposite vertices k of triangle (i, j, k)
/// and l of triangle (j, i, l).
struct Hinge {
  std::array<int, 2> edge;
  std::array<int, 2> flaps;
  double rest_edge_length = 0.0;
  double rest_area_sum = 0.0;
  double rest_angle = 0.0;
};

/// Immutable rest geometry with hinge and boundary topology.
///
/// Construction validates the input: indices in range, no degenerate
/// triangle, every edge shared by at most two consistently oriented
/// triangles. All deformation lives in a separate State.
class TriMesh {
 public:
  TriMesh(std::vector<Eigen::Vector3d> vertices, std::vector<std::array<int, 3>> triangles);

  int vertex_count() const { return static_cast<int>(vertices_.size()); }
  int triangle_count() const { return static_cast<int>(triangles_.size()); }
  int hinge_count() const { return static_cast<int>(hinges_.size()); }

  const std::vector<Eigen::Vector3d>& vertices() const { return vertices_; }
  const std::vector<std::array<int, 3>>& triangles() const { return triangles_; }
  const std::vector<Hinge>& hinges() const { return hinges_; }
  const std::vector<std::vector<int>>& boundary_loops() const { return boundary_loops_; }
  const std::vector<double>& rest_areas() const { return rest_areas_; }
  /// Interior edges and boundary edges together, as (min, max) pairs.
  const std::vector<std::array<int, 2>>& edges() const { return edges_; }
  int boundary_edge_count() const { return boundary_edge_count_; }

  const State& rest_state() const { return rest_; }
  CurvatureVector rest_angles() const;

  Eigen::Vector3d bbox_min() const { return bbox_min_; }
  Eigen::Vector3d bbox_max() const { return bbox_max_; }
  double diagonal() const { return (bbox_max_ - bbox_min_).norm(); }
  double total_rest_area() const;

  /// Content hash of positions and connectivity (hex, FNV-1a 64).
  std::string fingerprint() const;

 private:
  std::vector<Eigen::Vector3d> vertices_;
  std::vector<std::array<int, 3>> triangles_;
  std::vector<Hinge> hinges_;
  std::vector<std::vector<int>> boundary_loops_;
  std::vector<std::array<int, 2>> edges_;
  std::vector<double> rest_areas_;
  int boundary_edge_count_ = 0;
  State rest_;
  Eigen::Vector3d bbox_min_;
  Eigen::Vector3d bbox_max_;
};

TriMesh load_obj(const std::filesystem::path& path);
TriMesh parse_obj(const std::string& text);

void write_obj_frame(const TriMesh& mesh, const State& state, const std::filesystem::path& path);
std::string format_obj(const TriMesh& mesh, const State& state);

/// Signed angle between the normals of the two hinge triangles,
/// atan2((n1 x n2) . e, n1 . n2) with e the unit edge i -> j.
double dihedral_angle(const TriMesh& mesh, const State& state, int hinge);

inline Eigen::Vector3d vertex_of(const State& x, int v) { return x.segment<3>(3 * v); }

void check_state(const TriMesh& mesh, const State& state);

}  // namespace foldlab
