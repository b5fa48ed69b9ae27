// SPDX-License-Identifier: Apache-2.0
#include "foldlab/scenes.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Geometry>

#include "foldlab/error.hpp"

namespace foldlab {

namespace {

using Tri = std::array<int, 3>;

Tri ccw(const std::vector<Eigen::Vector3d>& V, Tri t) {
  const Eigen::Vector3d n = (V[t[1]] - V[t[0]]).cross(V[t[2]] - V[t[0]]);
  if (n.z() < 0) std::swap(t[1], t[2]);
  return t;
}

double point_segment_distance(const Eigen::Vector3d& p, const CreaseSegment& s) {
  const Eigen::Vector3d d = s.b - s.a;
  const double t = std::clamp((p - s.a).dot(d) / d.squaredNorm(), 0.0, 1.0);
  return (s.a + t * d - p).norm();
}

}  // namespace

TriMesh make_hinge_mesh(double side) {
  std::vector<Eigen::Vector3d> V{{0, 0, 0}, {side, 0, 0}, {side, side, 0}, {0, side, 0}};
  return TriMesh(V, {{0, 1, 2}, {0, 2, 3}});
}

TriMesh make_grid(double width, double height, int nx, int ny, const std::function<bool(int, int)>& flip) {
  if (nx < 1 || ny < 1) fail(ErrorCode::InvalidArgument, "grid needs at least one cell per side");
  std::vector<Eigen::Vector3d> V;
  V.reserve((nx + 1) * (ny + 1));
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i)
      V.emplace_back(width * (static_cast<double>(i) / nx - 0.5), height * (static_cast<double>(j) / ny - 0.5), 0.0);
  const auto id = [nx](int i, int j) { return j * (nx + 1) + i; };
  std::vector<Tri> T;
  T.reserve(2 * nx * ny);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if (flip(i, j)) {
        T.push_back({a, b, d});
        T.push_back({b, c, d});
      } else {
        T.push_back({a, b, c});
        T.push_back({a, c, d});
      }
    }
  }
  return TriMesh(std::move(V), std::move(T));
}

TriMesh make_square_sheet(double side, int cells) {
  return make_grid(side, side, cells, cells, [](int i, int j) { return (i + j) % 2 == 1; });
}

TriMesh make_disc(double radius, int rings) {
  if (rings < 1) fail(ErrorCode::InvalidArgument, "disc needs at least one ring");
  std::vector<Eigen::Vector3d> V{Eigen::Vector3d::Zero()};
  std::vector<int> start{0};
  for (int r = 1; r <= rings; ++r) {
    start.push_back(static_cast<int>(V.size()));
    const int count = 6 * r;
    const double rho = radius * r / rings;
    for (int k = 0; k < count; ++k) {
      const double phi = 2.0 * std::numbers::pi * k / count;
      V.emplace_back(rho * std::cos(phi), rho * std::sin(phi), 0.0);
    }
  }
  std::vector<Tri> T;
  for (int k = 0; k < 6; ++k) T.push_back(ccw(V, {0, 1 + k, 1 + (k + 1) % 6}));
  for (int r = 2; r <= rings; ++r) {
    const int ni = 6 * (r - 1), no = 6 * r;
    const int si = start[r - 1], so = start[r];
    // Zip the two rings by angle; inner index a, outer index b.
    int a = 0, b = 0;
    while (a < ni || b < no) {
      const double next_inner = static_cast<double>(a + 1) / ni;
      const double next_outer = static_cast<double>(b + 1) / no;
      if (b < no && (a >= ni || next_outer <= next_inner)) {
        T.push_back(ccw(V, {si + a % ni, so + b, so + (b + 1) % no}));
        ++b;
      } else {
        T.push_back(ccw(V, {si + a, si + (a + 1) % ni, so + b % no}));
        ++a;
      }
    }
  }
  return TriMesh(std::move(V), std::move(T));
}

std::vector<int> hinges_on_segments(const TriMesh& mesh, const std::vector<CreaseSegment>& segments, double tol) {
  std::vector<int> out;
  const auto& V = mesh.vertices();
  for (int h = 0; h < mesh.hinge_count(); ++h) {
    const auto [i, j] = mesh.hinges()[h].edge;
    for (const auto& s : segments) {
      if (point_segment_distance(V[i], s) <= tol && point_segment_distance(V[j], s) <= tol) {
        out.push_back(h);
        break;
      }
    }
  }
  return out;
}

TriMesh make_origami_sheet(double panel, int cells) {
  const int n = 3 * cells;
  // Edge panels carry one diagonal direction throughout so their pinwheel
  // diagonals are mesh lines; corner panels use the radial diagonal.
  return make_grid(3 * panel, 3 * panel, n, n, [cells](int i, int j) {
    const int pi = i / cells, pj = j / cells;
    if (pi != 1 && pj != 1) return (pi == 0) != (pj == 0);
    if (pj == 1 && pi != 1) return true;
    if (pi == 1 && pj != 1) return false;
    return (i + j) % 2 == 1;
  });
}

std::vector<CreaseSegment> origami_twist_creases(double panel) {
  const double a = 0.5 * panel, o = 1.5 * panel;
  return {
      // Center square outline.
      {{-a, -a, 0}, {a, -a, 0}},
      {{a, -a, 0}, {a, a, 0}},
      {{a, a, 0}, {-a, a, 0}},
      {{-a, a, 0}, {-a, -a, 0}},
      // One diagonal per edge panel, leaving each center corner in pinwheel order.
      {{a, a, 0}, {o, -a, 0}},
      {{-a, a, 0}, {a, o, 0}},
      {{-a, -a, 0}, {-o, a, 0}},
      {{a, -a, 0}, {-a, -o, 0}},
  };
}

TriMesh make_life_flower(double radius, int rings) {
  const TriMesh disc = make_disc(radius, rings);
  const auto& V = disc.vertices();
  // Petal k: pointed lens along angle k * 60 deg, spanning radii
  // 0.2 R to 0.8 R, built from two circular arcs.
  const double half_length = 0.3 * radius, half_width = 0.12 * radius;
  // Circle through the lens tips (+-half_length, 0) and (0, +-half_width).
  const double arc_r = (half_length * half_length + half_width * half_width) / (2 * half_width);
  const auto in_petal = [&](const Eigen::Vector3d& p) {
    for (int k = 0; k < 6; ++k) {
      const double phi = std::numbers::pi / 3.0 * k;
      const Eigen::Vector2d axis(std::cos(phi), std::sin(phi));
      const Eigen::Vector2d d = p.head<2>() - 0.5 * radius * axis;
      const double u = d.dot(axis), w = d.x() * -axis.y() + d.y() * axis.x();
      const Eigen::Vector2d q(u, std::abs(w));
      if (std::abs(u) < half_length && (q - Eigen::Vector2d(0, half_width - arc_r)).norm() < arc_r) return true;
    }
    return false;
  };
  std::vector<int> remap(V.size(), -1);
  std::vector<Eigen::Vector3d> keptV;
  std::vector<Tri> keptT;
  for (const auto& t : disc.triangles()) {
    if (in_petal((V[t[0]] + V[t[1]] + V[t[2]]) / 3.0)) continue;
    Tri nt;
    for (int c = 0; c < 3; ++c) {
      if (remap[t[c]] < 0) {
        remap[t[c]] = static_cast<int>(keptV.size());
        keptV.push_back(V[t[c]]);
      }
      nt[c] = remap[t[c]];
    }
    keptT.push_back(nt);
  }
  return TriMesh(std::move(keptV), std::move(keptT));
}

}  // namespace foldlab
