// SPDX-License-Identifier: Apache-2.0
#include "foldlab/periodic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <unordered_map>

#include <Eigen/SparseCholesky>

#include "foldlab/error.hpp"

namespace foldlab {

namespace {

using Triplet = Eigen::Triplet<double>;

struct Sides {
  std::vector<int> left, right, bottom, top;
  double xmin, xmax, ymin, ymax, tol;
};

Sides classify(const TriMesh& mesh, double rel_tol) {
  Sides s;
  const Eigen::Vector3d lo = mesh.bbox_min(), hi = mesh.bbox_max();
  s.xmin = lo.x();
  s.xmax = hi.x();
  s.ymin = lo.y();
  s.ymax = hi.y();
  s.tol = rel_tol * mesh.diagonal();
  if (!(s.xmax - s.xmin > s.tol) || !(s.ymax - s.ymin > s.tol)) {
    fail(ErrorCode::Topology, "periodic tiling needs a sheet with non-zero extent in x and y");
  }
  const auto& V = mesh.vertices();
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    if (std::abs(V[v].x() - s.xmin) <= s.tol) s.left.push_back(v);
    if (std::abs(V[v].x() - s.xmax) <= s.tol) s.right.push_back(v);
    if (std::abs(V[v].y() - s.ymin) <= s.tol) s.bottom.push_back(v);
    if (std::abs(V[v].y() - s.ymax) <= s.tol) s.top.push_back(v);
  }
  // Vertices on the rectangle must also be boundary vertices of the mesh.
  std::vector<char> on_boundary(mesh.vertex_count(), 0);
  for (const auto& loop : mesh.boundary_loops())
    for (int v : loop) on_boundary[v] = 1;
  for (const auto* side : {&s.left, &s.right, &s.bottom, &s.top}) {
    for (int v : *side) {
      if (!on_boundary[v]) {
        fail(ErrorCode::Topology, "vertex " + std::to_string(v) + " lies on the tile rectangle but is not a boundary vertex");
      }
    }
  }
  for (const auto& loop : mesh.boundary_loops()) {
    for (int v : loop) {
      const auto& p = V[v];
      const bool on_rect = std::abs(p.x() - s.xmin) <= s.tol || std::abs(p.x() - s.xmax) <= s.tol ||
                           std::abs(p.y() - s.ymin) <= s.tol || std::abs(p.y() - s.ymax) <= s.tol;
      if (!on_rect) fail(ErrorCode::Topology, "boundary vertex " + std::to_string(v) + " is not on the tile rectangle");
    }
  }
  return s;
}

// Partner of each vertex in `from` within `to`, matching the coordinates
// other than `axis`.
std::vector<std::array<int, 2>> match(const TriMesh& mesh, const std::vector<int>& from, const std::vector<int>& to,
                                      int axis, double tol, const char* from_name, const char* to_name) {
  const auto& V = mesh.vertices();
  std::vector<char> used(mesh.vertex_count(), 0);
  std::vector<std::array<int, 2>> pairs;
  for (int a : from) {
    int found = -1;
    for (int b : to) {
      bool same = true;
      for (int c = 0; c < 3; ++c)
        if (c != axis && std::abs(V[a][c] - V[b][c]) > tol) same = false;
      if (same) {
        found = b;
        break;
      }
    }
    if (found < 0 || used[found]) {
      std::ostringstream msg;
      msg << from_name << " boundary vertex " << a << " has no partner on the " << to_name << " boundary";
      fail(ErrorCode::Topology, msg.str());
    }
    used[found] = 1;
    pairs.push_back({a, found});
  }
  for (int b : to) {
    if (!used[b]) {
      std::ostringstream msg;
      msg << to_name << " boundary vertex " << b << " has no partner on the " << from_name << " boundary";
      fail(ErrorCode::Topology, msg.str());
    }
  }
  return pairs;
}

Eigen::Vector3d sheet_center(const TriMesh& mesh) { return 0.5 * (mesh.bbox_min() + mesh.bbox_max()); }

}  // namespace

TilingKind parse_tiling_kind(const std::string& name) {
  if (name == "translation") return TilingKind::Translation;
  if (name == "reflection") return TilingKind::Reflection;
  fail(ErrorCode::InvalidArgument, "unknown tiling kind '" + name + "' (expected translation or reflection)");
}

std::string to_string(TilingKind kind) { return kind == TilingKind::Translation ? "translation" : "reflection"; }

PeriodicReduction build_translation_reduction(const TriMesh& mesh, double rel_tol) {
  const Sides s = classify(mesh, rel_tol);
  PeriodicReduction red;
  red.kind = TilingKind::Translation;
  red.pairs_x = match(mesh, s.left, s.right, 0, s.tol, "left", "right");
  red.pairs_y = match(mesh, s.bottom, s.top, 1, s.tol, "bottom", "top");

  const int n = mesh.vertex_count();
  std::vector<int> partner_x(n, -1), partner_y(n, -1);
  for (const auto& [m, sl] : red.pairs_x) partner_x[sl] = m;
  for (const auto& [m, sl] : red.pairs_y) partner_y[sl] = m;

  std::vector<int> slot(n, -1);
  int masters = 0;
  for (int v = 0; v < n; ++v)
    if (partner_x[v] < 0 && partner_y[v] < 0) slot[v] = masters++;
  red.period_index = 3 * masters;
  const int dim = 3 * masters + 6;

  std::vector<Triplet> trip;
  for (int v = 0; v < n; ++v) {
    int root = v, ax = 0, ay = 0;
    while (slot[root] < 0) {
      if (partner_x[root] >= 0) {
        root = partner_x[root];
        ++ax;
      } else {
        root = partner_y[root];
        ++ay;
      }
    }
    for (int c = 0; c < 3; ++c) {
      trip.emplace_back(3 * v + c, 3 * slot[root] + c, 1.0);
      if (ax) trip.emplace_back(3 * v + c, red.period_index + c, ax);
      if (ay) trip.emplace_back(3 * v + c, red.period_index + 3 + c, ay);
    }
  }
  red.map.P.resize(3 * n, dim);
  red.map.P.setFromTriplets(trip.begin(), trip.end());
  red.map.offset = Eigen::VectorXd::Zero(3 * n);
  red.map.q_rest = Eigen::VectorXd::Zero(dim);
  const auto& V = mesh.vertices();
  for (int v = 0; v < n; ++v)
    if (slot[v] >= 0) red.map.q_rest.segment<3>(3 * slot[v]) = V[v];
  // Periods from the rest pairs so that expansion reproduces rest exactly.
  const auto& [mx, sx] = red.pairs_x.front();
  const auto& [my, sy] = red.pairs_y.front();
  red.map.q_rest.segment<3>(red.period_index) = V[sx] - V[mx];
  red.map.q_rest.segment<3>(red.period_index + 3) = V[sy] - V[my];
  red.center = sheet_center(mesh).head<2>();
  return red;
}

PeriodicReduction build_reflection_reduction(const TriMesh& mesh, double rel_tol) {
  const Sides s = classify(mesh, rel_tol);
  PeriodicReduction red;
  red.kind = TilingKind::Reflection;
  red.left = s.left;
  red.right = s.right;
  red.bottom = s.bottom;
  red.top = s.top;
  const double cx = 0.5 * (s.xmin + s.xmax), cy = 0.5 * (s.ymin + s.ymax);
  red.center = {cx, cy};
  const int n = mesh.vertex_count();

  // side_x: -1 left, +1 right, 0 interior in x; likewise side_y.
  std::vector<int> side_x(n, 0), side_y(n, 0);
  for (int v : s.left) side_x[v] = -1;
  for (int v : s.right) side_x[v] = 1;
  for (int v : s.bottom) side_y[v] = -1;
  for (int v : s.top) side_y[v] = 1;

  const auto& V = mesh.vertices();
  std::vector<Triplet> trip;
  std::vector<double> q_rest;
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(3 * n);
  int col = 0;
  const auto add_free = [&](int row, double rest) {
    trip.emplace_back(row, col++, 1.0);
    q_rest.push_back(rest);
  };
  struct Tie {
    int row;
    double sign;
    bool is_a;
  };
  std::vector<Tie> ties;
  for (int v = 0; v < n; ++v) {
    const bool bx = side_x[v] != 0, by = side_y[v] != 0;
    if (!bx && !by) {
      for (int c = 0; c < 3; ++c) add_free(3 * v + c, V[v][c]);
      continue;
    }
    if (bx) {
      offset[3 * v] = cx;
      ties.push_back({3 * v, static_cast<double>(side_x[v]), true});
    } else {
      offset[3 * v] = V[v].x();
    }
    if (by) {
      offset[3 * v + 1] = cy;
      ties.push_back({3 * v + 1, static_cast<double>(side_y[v]), false});
    } else {
      offset[3 * v + 1] = V[v].y();
    }
    add_free(3 * v + 2, V[v].z());
  }
  red.period_index = col;
  for (const auto& t : ties) trip.emplace_back(t.row, col + (t.is_a ? 0 : 1), t.sign);
  q_rest.push_back(0.5 * (s.xmax - s.xmin));
  q_rest.push_back(0.5 * (s.ymax - s.ymin));
  const int dim = col + 2;

  red.map.P.resize(3 * n, dim);
  red.map.P.setFromTriplets(trip.begin(), trip.end());
  red.map.offset = std::move(offset);
  red.map.q_rest = Eigen::Map<const Eigen::VectorXd>(q_rest.data(), dim);
  return red;
}

PeriodicReduction build_reduction(const TriMesh& mesh, TilingKind kind) {
  return kind == TilingKind::Translation ? build_translation_reduction(mesh) : build_reflection_reduction(mesh);
}

Eigen::VectorXd PeriodicReduction::restrict_state(const State& x) const {
  if (x.size() != map.P.rows()) fail(ErrorCode::InvalidArgument, "state does not match the reduction");
  const SparseMatrix PtP = map.P.transpose() * map.P;
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(PtP);
  if (ldlt.info() != Eigen::Success) fail(ErrorCode::Internal, "reduction map is rank deficient");
  return ldlt.solve(map.P.transpose() * (x - map.offset));
}

std::array<Eigen::Vector3d, 2> PeriodicReduction::periods(const State& x) const {
  const Eigen::VectorXd q = restrict_state(x);
  if (kind == TilingKind::Translation) {
    return {q.segment<3>(period_index), q.segment<3>(period_index + 3)};
  }
  return {Eigen::Vector3d(2.0 * q[period_index], 0, 0), Eigen::Vector3d(0, 2.0 * q[period_index + 1], 0)};
}

std::vector<Pin> periodic_pins(const TriMesh& mesh, TilingKind kind, double weight) {
  std::vector<Pin> pins = pins_321(mesh, weight);
  if (kind == TilingKind::Reflection) {
    // In-plane motion is already fixed by the reflection planes; only the
    // vertical translation and the two tilts remain.
    for (auto& p : pins) p.mask = {false, false, true};
  }
  return pins;
}

ModeSet periodic_modes(const PeriodicReduction& reduction, const ShellModel& model, int k, const EigenOptions& options) {
  const auto& P = reduction.map.P;
  if (P.rows() != model.dofs()) fail(ErrorCode::InvalidArgument, "reduction does not match the model");
  if (k < 0 || k > reduction.dimension()) {
    fail(ErrorCode::InvalidArgument, "requested " + std::to_string(k) + " modes but the reduced dimension is " +
                                         std::to_string(reduction.dimension()));
  }
  const State rest = model.mesh().rest_state();
  const SparseMatrix H = model.hessian(model.mesh().rest_angles(), rest);
  const SparseMatrix Pt = P.transpose();
  const SparseMatrix Hr = Pt * H * P;
  const SparseMatrix Mr = Pt * model.mass().asDiagonal() * P;
  return eigenmodes(Hr, Mr, k, options);
}

Eigen::VectorXd expand_mode(const PeriodicReduction& reduction, const ModeSet& modes, int i) {
  if (modes.vectors.rows() != reduction.dimension()) fail(ErrorCode::InvalidArgument, "mode set is not in the reduced space");
  return reduction.map.P * modes.mode(i);
}

Trajectory fold_periodic(const ShellModel& model, const PeriodicReduction& reduction, const ModeSet& modes, int i,
                         const FoldOptions& options) {
  const TriMesh& mesh = model.mesh();
  const Eigen::VectorXd e = expand_mode(reduction, modes, i);
  const SparseMatrix J = curvature_jacobian(mesh, mesh.rest_state());
  const StrainPath path(mesh.rest_angles(), J * e);
  Trajectory out = fold_path(model, path, options, &reduction.map);
  out.mode_indices = {i};
  out.coefficients = {1.0};
  return out;
}

double periodicity_error(const PeriodicReduction& reduction, const State& x) {
  double err = 0.0;
  if (reduction.kind == TilingKind::Translation) {
    const auto check = [&](const std::vector<std::array<int, 2>>& pairs) {
      const Eigen::Vector3d T = vertex_of(x, pairs.front()[1]) - vertex_of(x, pairs.front()[0]);
      for (const auto& [m, s] : pairs) err = std::max(err, (vertex_of(x, s) - vertex_of(x, m) - T).cwiseAbs().maxCoeff());
    };
    check(reduction.pairs_x);
    check(reduction.pairs_y);
    return err;
  }
  const auto spread = [&](const std::vector<int>& side, int axis, double center) {
    double lo = INFINITY, hi = -INFINITY;
    for (int v : side) {
      const double d = x[3 * v + axis] - center;
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    return std::pair{lo, hi};
  };
  const auto [l0, l1] = spread(reduction.left, 0, reduction.center.x());
  const auto [r0, r1] = spread(reduction.right, 0, reduction.center.x());
  const auto [b0, b1] = spread(reduction.bottom, 1, reduction.center.y());
  const auto [t0, t1] = spread(reduction.top, 1, reduction.center.y());
  err = std::max({l1 - l0, r1 - r0, b1 - b0, t1 - t0, std::abs(r0 + l0), std::abs(t0 + b0)});
  return err;
}

TriMesh export_tiling(const TriMesh& mesh, const PeriodicReduction& reduction, const State& x, int nx, int ny) {
  check_state(mesh, x);
  if (nx < 1 || ny < 1) fail(ErrorCode::InvalidArgument, "tile counts must be at least 1");
  const auto [Tx, Ty] = reduction.periods(x);
  const double weld = 1e-9;
  const int n = mesh.vertex_count();

  std::vector<Eigen::Vector3d> V;
  std::vector<std::array<int, 3>> T;
  std::unordered_map<long long, std::vector<int>> grid;
  const auto key = [](long long i, long long j, long long k) { return (i * 73856093LL) ^ (j * 19349663LL) ^ (k * 83492791LL); };
  const double cell = 4 * weld;
  const auto insert = [&](const Eigen::Vector3d& p) {
    const long long gi = std::llround(std::floor(p.x() / cell)), gj = std::llround(std::floor(p.y() / cell)),
                    gk = std::llround(std::floor(p.z() / cell));
    for (long long di = -1; di <= 1; ++di)
      for (long long dj = -1; dj <= 1; ++dj)
        for (long long dk = -1; dk <= 1; ++dk) {
          auto it = grid.find(key(gi + di, gj + dj, gk + dk));
          if (it == grid.end()) continue;
          for (int v : it->second)
            if ((V[v] - p).norm() <= weld) return v;
        }
    const int id = static_cast<int>(V.size());
    V.push_back(p);
    grid[key(gi, gj, gk)].push_back(id);
    return id;
  };

  std::vector<int> local(n);
  const Eigen::Vector2d c = reduction.center;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const bool mirror_x = reduction.kind == TilingKind::Reflection && (i % 2 == 1);
      const bool mirror_y = reduction.kind == TilingKind::Reflection && (j % 2 == 1);
      for (int v = 0; v < n; ++v) {
        Eigen::Vector3d p = vertex_of(x, v);
        if (mirror_x) p.x() = 2 * c.x() - p.x();
        if (mirror_y) p.y() = 2 * c.y() - p.y();
        p += i * Tx + j * Ty;
        local[v] = insert(p);
      }
      const bool flip = mirror_x != mirror_y;
      for (const auto& t : mesh.triangles()) {
        if (flip) {
          T.push_back({local[t[0]], local[t[2]], local[t[1]]});
        } else {
          T.push_back({local[t[0]], local[t[1]], local[t[2]]});
        }
      }
    }
  }
  return TriMesh(std::move(V), std::move(T));
}

}  // namespace foldlab
