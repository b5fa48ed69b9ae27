// SPDX-License-Identifier: Apache-2.0
#include "barrier.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include <Eigen/Geometry>

namespace foldlab::detail {

namespace {

using D = Dual2<12>;
using P3 = V3<D>;

enum class Feature { Face, Edge01, Edge12, Edge20, V0, V1, V2 };

// Region of the closest point of triangle (a, b, c) to p (Ericson, RTCD 5.1.5).
Feature closest_feature(const Eigen::Vector3d& p, const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                        const Eigen::Vector3d& c) {
  const Eigen::Vector3d ab = b - a, ac = c - a, ap = p - a;
  const double d1 = ab.dot(ap), d2 = ac.dot(ap);
  if (d1 <= 0 && d2 <= 0) return Feature::V0;
  const Eigen::Vector3d bp = p - b;
  const double d3 = ab.dot(bp), d4 = ac.dot(bp);
  if (d3 >= 0 && d4 <= d3) return Feature::V1;
  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0 && d1 >= 0 && d3 <= 0) return Feature::Edge01;
  const Eigen::Vector3d cp = p - c;
  const double d5 = ab.dot(cp), d6 = ac.dot(cp);
  if (d6 >= 0 && d5 <= d6) return Feature::V2;
  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0 && d2 >= 0 && d6 <= 0) return Feature::Edge20;
  const double va = d3 * d6 - d5 * d4;
  if (va <= 0 && (d4 - d3) >= 0 && (d5 - d6) >= 0) return Feature::Edge12;
  return Feature::Face;
}

template <class T>
T point_line_d2(const V3<T>& p, const V3<T>& u, const V3<T>& v) {
  const V3<T> e = v - u;
  const V3<T> c = cross(p - u, e);
  return dot(c, c) / dot(e, e);
}

template <class T>
T point_point_d2(const V3<T>& p, const V3<T>& u) {
  const V3<T> d = p - u;
  return dot(d, d);
}

// Parameter of the closest point on segment [u, v] to p, clamped to [0, 1].
double segment_param(const Eigen::Vector3d& p, const Eigen::Vector3d& u, const Eigen::Vector3d& v) {
  const Eigen::Vector3d e = v - u;
  const double len2 = e.squaredNorm();
  if (len2 <= 0) return 0.0;
  return std::clamp((p - u).dot(e) / len2, 0.0, 1.0);
}

template <class T>
T point_segment_d2(const V3<T>& p, const V3<T>& u, const V3<T>& v, double param) {
  if (param <= 0.0) return point_point_d2(p, u);
  if (param >= 1.0) return point_point_d2(p, v);
  return point_line_d2(p, u, v);
}

V3<double> as_v3(const Eigen::Vector3d& p) { return {p[0], p[1], p[2]}; }

// Ericson, RTCD 5.1.9.
void segment_segment_params(const Eigen::Vector3d& p1, const Eigen::Vector3d& q1, const Eigen::Vector3d& p2,
                            const Eigen::Vector3d& q2, double& s, double& t) {
  const Eigen::Vector3d d1 = q1 - p1, d2 = q2 - p2, r = p1 - p2;
  const double a = d1.squaredNorm(), e = d2.squaredNorm(), f = d2.dot(r);
  const double c = d1.dot(r), b = d1.dot(d2);
  const double denom = a * e - b * b;
  s = denom > 0 ? std::clamp((b * f - c * e) / denom, 0.0, 1.0) : 0.0;
  t = (b * s + f) / e;
  if (t < 0) {
    t = 0;
    s = std::clamp(-c / a, 0.0, 1.0);
  } else if (t > 1) {
    t = 1;
    s = std::clamp((b - c) / a, 0.0, 1.0);
  }
}

constexpr double kParallelTol = 1e-8;

// Which sub-case an edge-edge pair uses; shared by the value and AD paths.
struct EdgeEdgeCase {
  bool line_line = false;
  int which = 0;  // 0..3: endpoint a0, a1, b0, b1 against the other segment
  double param = 0.0;
};

EdgeEdgeCase classify_edge_edge(const Eigen::Vector3d& a0, const Eigen::Vector3d& a1, const Eigen::Vector3d& b0,
                                const Eigen::Vector3d& b1) {
  EdgeEdgeCase out;
  double s = 0, t = 0;
  segment_segment_params(a0, a1, b0, b1, s, t);
  const Eigen::Vector3d u = a1 - a0, v = b1 - b0;
  const double cross2 = u.cross(v).squaredNorm();
  if (s > 0 && s < 1 && t > 0 && t < 1 && cross2 > kParallelTol * u.squaredNorm() * v.squaredNorm()) {
    out.line_line = true;
    return out;
  }
  const std::array<std::array<Eigen::Vector3d, 3>, 4> cases{{{a0, b0, b1}, {a1, b0, b1}, {b0, a0, a1}, {b1, a0, a1}}};
  double best = std::numeric_limits<double>::infinity();
  for (int w = 0; w < 4; ++w) {
    const double param = segment_param(cases[w][0], cases[w][1], cases[w][2]);
    const Eigen::Vector3d closest = cases[w][1] + param * (cases[w][2] - cases[w][1]);
    const double d2 = (cases[w][0] - closest).squaredNorm();
    if (d2 < best) {
      best = d2;
      out.which = w;
      out.param = param;
    }
  }
  return out;
}

template <class T>
T edge_edge_d2(const std::array<V3<T>, 4>& p, const EdgeEdgeCase& cs) {
  if (cs.line_line) {
    const V3<T> n = cross(p[1] - p[0], p[3] - p[2]);
    const T s = dot(p[2] - p[0], n);
    return s * s / dot(n, n);
  }
  switch (cs.which) {
    case 0: return point_segment_d2(p[0], p[2], p[3], cs.param);
    case 1: return point_segment_d2(p[1], p[2], p[3], cs.param);
    case 2: return point_segment_d2(p[2], p[0], p[1], cs.param);
    default: return point_segment_d2(p[3], p[0], p[1], cs.param);
  }
}

template <class T>
T point_triangle_d2(const std::array<V3<T>, 4>& q, Feature f) {
  switch (f) {
    case Feature::V0: return point_point_d2(q[0], q[1]);
    case Feature::V1: return point_point_d2(q[0], q[2]);
    case Feature::V2: return point_point_d2(q[0], q[3]);
    case Feature::Edge01: return point_line_d2(q[0], q[1], q[2]);
    case Feature::Edge12: return point_line_d2(q[0], q[2], q[3]);
    case Feature::Edge20: return point_line_d2(q[0], q[3], q[1]);
    case Feature::Face:
    default: {
      const V3<T> n = cross(q[2] - q[1], q[3] - q[1]);
      const T s = dot(q[0] - q[1], n);
      return s * s / dot(n, n);
    }
  }
}

template <class T, class Make>
T pair_d2(const ContactPair& pair, const State& x, Make make) {
  std::array<Eigen::Vector3d, 4> pts;
  for (int s = 0; s < 4; ++s) pts[s] = vertex_of(x, pair.verts[s]);
  std::array<V3<T>, 4> q;
  for (int s = 0; s < 4; ++s) q[s] = make(pts[s], s);
  if (pair.kind == ContactPair::Kind::PointTriangle) {
    return point_triangle_d2(q, closest_feature(pts[0], pts[1], pts[2], pts[3]));
  }
  return edge_edge_d2(q, classify_edge_edge(pts[0], pts[1], pts[2], pts[3]));
}

struct CellKey {
  long long i, j, k;
  bool operator==(const CellKey& o) const { return i == o.i && j == o.j && k == o.k; }
};

struct CellHash {
  std::size_t operator()(const CellKey& c) const {
    return static_cast<std::size_t>(c.i * 73856093LL ^ c.j * 19349663LL ^ c.k * 83492791LL);
  }
};

class SpatialHash {
 public:
  explicit SpatialHash(double cell) : cell_(cell) {}

  template <class F>
  void for_cells(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, F&& f) const {
    const CellKey a = key(lo), b = key(hi);
    for (long long i = a.i; i <= b.i; ++i)
      for (long long j = a.j; j <= b.j; ++j)
        for (long long k = a.k; k <= b.k; ++k) f(CellKey{i, j, k});
  }

  void insert(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, int id) {
    for_cells(lo, hi, [&](const CellKey& c) { cells_[c].push_back(id); });
  }

  template <class F>
  void query(const Eigen::Vector3d& lo, const Eigen::Vector3d& hi, F&& f) const {
    for_cells(lo, hi, [&](const CellKey& c) {
      auto it = cells_.find(c);
      if (it == cells_.end()) return;
      for (int id : it->second) f(id);
    });
  }

 private:
  CellKey key(const Eigen::Vector3d& p) const {
    return {static_cast<long long>(std::floor(p[0] / cell_)), static_cast<long long>(std::floor(p[1] / cell_)),
            static_cast<long long>(std::floor(p[2] / cell_))};
  }

  double cell_;
  std::unordered_map<CellKey, std::vector<int>, CellHash> cells_;
};

}  // namespace

Dual2<12> pair_distance(const ContactPair& pair, const State& x) {
  const D d2 = pair_d2<D>(pair, x, [](const Eigen::Vector3d& p, int slot) { return variable_point<12>(p, 3 * slot); });
  return sqrt(d2);
}

double pair_distance_value(const ContactPair& pair, const State& x) {
  return std::sqrt(pair_d2<double>(pair, x, [](const Eigen::Vector3d& p, int) { return as_v3(p); }));
}

std::vector<ContactPair> find_contact_pairs(const TriMesh& mesh, const State& x, double dhat) {
  std::vector<ContactPair> out;
  const auto& tris = mesh.triangles();
  const auto& edges = mesh.edges();
  double mean_edge = 0.0;
  for (const auto& e : edges) mean_edge += (vertex_of(x, e[1]) - vertex_of(x, e[0])).norm();
  mean_edge /= static_cast<double>(std::max<std::size_t>(1, edges.size()));
  const double cell = std::max(mean_edge, 2.0 * dhat);
  const Eigen::Vector3d pad = Eigen::Vector3d::Constant(dhat);

  SpatialHash tri_hash(cell);
  for (std::size_t t = 0; t < tris.size(); ++t) {
    Eigen::Vector3d lo = vertex_of(x, tris[t][0]), hi = lo;
    for (int c = 1; c < 3; ++c) {
      lo = lo.cwiseMin(vertex_of(x, tris[t][c]));
      hi = hi.cwiseMax(vertex_of(x, tris[t][c]));
    }
    tri_hash.insert(lo - pad, hi + pad, static_cast<int>(t));
  }
  std::vector<int> hits;
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    const Eigen::Vector3d p = vertex_of(x, v);
    hits.clear();
    tri_hash.query(p, p, [&](int t) { hits.push_back(t); });
    std::sort(hits.begin(), hits.end());
    hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
    for (int t : hits) {
      const auto& tri = tris[t];
      if (tri[0] == v || tri[1] == v || tri[2] == v) continue;
      ContactPair pair{ContactPair::Kind::PointTriangle, {v, tri[0], tri[1], tri[2]}};
      if (pair_distance_value(pair, x) < dhat) out.push_back(pair);
    }
  }

  SpatialHash edge_hash(cell);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Eigen::Vector3d a = vertex_of(x, edges[e][0]), b = vertex_of(x, edges[e][1]);
    edge_hash.insert(a.cwiseMin(b) - pad, a.cwiseMax(b) + pad, static_cast<int>(e));
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Eigen::Vector3d a = vertex_of(x, edges[e][0]), b = vertex_of(x, edges[e][1]);
    hits.clear();
    edge_hash.query(a.cwiseMin(b), a.cwiseMax(b), [&](int f) {
      if (f > static_cast<int>(e)) hits.push_back(f);
    });
    std::sort(hits.begin(), hits.end());
    hits.erase(std::unique(hits.begin(), hits.end()), hits.end());
    for (int f : hits) {
      const auto& ea = edges[e];
      const auto& eb = edges[f];
      if (ea[0] == eb[0] || ea[0] == eb[1] || ea[1] == eb[0] || ea[1] == eb[1]) continue;
      ContactPair pair{ContactPair::Kind::EdgeEdge, {ea[0], ea[1], eb[0], eb[1]}};
      if (pair_distance_value(pair, x) < dhat) out.push_back(pair);
    }
  }
  return out;
}

}  // namespace foldlab::detail
