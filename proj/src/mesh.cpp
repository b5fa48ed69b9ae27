// SPDX-License-Identifier: Apache-2.0
#include "foldlab/mesh.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>

#include <Eigen/Geometry>

#include "fingerprint.hpp"
#include "foldlab/error.hpp"

namespace foldlab {

namespace {

constexpr double kMinRestArea = 1e-12;
constexpr double kMinDeformedArea = 1e-14;

std::uint64_t edge_key(int a, int b) {
  return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(a)) << 32) |
         static_cast<std::uint32_t>(b);
}

std::string edge_name(int a, int b) {
  return "(" + std::to_string(a) + ", " + std::to_string(b) + ")";
}

struct DirectedEdge {
  int triangle;
  int opposite;
};

}  // namespace

TriMesh::TriMesh(std::vector<Eigen::Vector3d> vertices, std::vector<std::array<int, 3>> triangles)
    : vertices_(std::move(vertices)), triangles_(std::move(triangles)) {
  const int n = vertex_count();
  if (n == 0) fail(ErrorCode::Topology, "mesh has no vertices");
  if (triangles_.empty()) fail(ErrorCode::Topology, "mesh has no triangles");

  rest_.resize(3 * n);
  bbox_min_ = vertices_[0];
  bbox_max_ = vertices_[0];
  for (int v = 0; v < n; ++v) {
    if (!vertices_[v].allFinite()) fail(ErrorCode::Parse, "vertex " + std::to_string(v) + " is not finite");
    rest_.segment<3>(3 * v) = vertices_[v];
    bbox_min_ = bbox_min_.cwiseMin(vertices_[v]);
    bbox_max_ = bbox_max_.cwiseMax(vertices_[v]);
  }

  rest_areas_.resize(triangles_.size());
  {
    std::unordered_map<std::uint64_t, int> incidence;
    incidence.reserve(3 * triangles_.size());
    for (const auto& tri : triangles_) {
      for (int c = 0; c < 3; ++c) {
        const int a = std::min(tri[c], tri[(c + 1) % 3]);
        const int b = std::max(tri[c], tri[(c + 1) % 3]);
        if (a < 0 || b >= n) continue;  // reported below with the triangle index
        if (++incidence[edge_key(a, b)] > 2) fail(ErrorCode::Topology, "non-manifold edge " + edge_name(a, b));
      }
    }
  }
  std::unordered_map<std::uint64_t, DirectedEdge> directed;
  directed.reserve(3 * triangles_.size());
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    const auto& tri = triangles_[t];
    for (int c = 0; c < 3; ++c) {
      if (tri[c] < 0 || tri[c] >= n) {
        fail(ErrorCode::Topology, "triangle " + std::to_string(t) + " references vertex " +
                                      std::to_string(tri[c]) + " out of range");
      }
    }
    if (tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2]) {
      fail(ErrorCode::DegenerateElement, "triangle " + std::to_string(t) + " repeats a vertex");
    }
    const double area =
        0.5 * (vertices_[tri[1]] - vertices_[tri[0]]).cross(vertices_[tri[2]] - vertices_[tri[0]]).norm();
    if (!(area > kMinRestArea)) {
      fail(ErrorCode::DegenerateElement,
           "triangle " + std::to_string(t) + " is degenerate (rest area " + std::to_string(area) + ")");
    }
    rest_areas_[t] = area;
    for (int c = 0; c < 3; ++c) {
      const int a = tri[c];
      const int b = tri[(c + 1) % 3];
      const auto [it, inserted] = directed.emplace(edge_key(a, b), DirectedEdge{static_cast<int>(t), tri[(c + 2) % 3]});
      if (!inserted) {
        fail(ErrorCode::Topology, "inconsistent triangle orientation at edge " +
                                      edge_name(std::min(a, b), std::max(a, b)));
      }
    }
  }

  std::vector<std::array<int, 2>> boundary_directed;
  for (const auto& [key, de] : directed) {
    const int a = static_cast<int>(key >> 32);
    const int b = static_cast<int>(key & 0xffffffffu);
    const bool has_reverse = directed.count(edge_key(b, a)) > 0;
    if (!has_reverse) {
      boundary_directed.push_back({a, b});
      edges_.push_back({std::min(a, b), std::max(a, b)});
    } else if (a < b) {
      edges_.push_back({a, b});
      const DirectedEdge& other = directed.at(edge_key(b, a));
      Hinge h;
      h.edge = {a, b};
      h.flaps = {de.opposite, other.opposite};
      if (h.flaps[0] == h.flaps[1]) fail(ErrorCode::Topology, "edge " + edge_name(a, b) + " closes a doubled triangle");
      h.rest_edge_length = (vertices_[b] - vertices_[a]).norm();
      h.rest_area_sum = rest_areas_[de.triangle] + rest_areas_[other.triangle];
      hinges_.push_back(h);
    }
  }
  std::sort(edges_.begin(), edges_.end());
  std::sort(hinges_.begin(), hinges_.end(), [](const Hinge& l, const Hinge& r) { return l.edge < r.edge; });
  for (int h = 0; h < hinge_count(); ++h) hinges_[h].rest_angle = dihedral_angle(*this, rest_, h);

  boundary_edge_count_ = static_cast<int>(boundary_directed.size());
  std::sort(boundary_directed.begin(), boundary_directed.end());
  std::multimap<int, std::size_t> outgoing;
  for (std::size_t e = 0; e < boundary_directed.size(); ++e) outgoing.emplace(boundary_directed[e][0], e);
  std::vector<bool> used(boundary_directed.size(), false);
  for (std::size_t start = 0; start < boundary_directed.size(); ++start) {
    if (used[start]) continue;
    std::vector<int> loop;
    std::size_t e = start;
    while (!used[e]) {
      used[e] = true;
      loop.push_back(boundary_directed[e][0]);
      const int next_vertex = boundary_directed[e][1];
      if (next_vertex == boundary_directed[start][0]) break;
      auto [lo, hi] = outgoing.equal_range(next_vertex);
      std::size_t next = boundary_directed.size();
      for (auto it = lo; it != hi; ++it) {
        if (!used[it->second]) {
          next = it->second;
          break;
        }
      }
      if (next == boundary_directed.size()) break;
      e = next;
    }
    boundary_loops_.push_back(std::move(loop));
  }
}

CurvatureVector TriMesh::rest_angles() const {
  CurvatureVector k(hinge_count());
  for (int h = 0; h < hinge_count(); ++h) k[h] = hinges_[h].rest_angle;
  return k;
}

double TriMesh::total_rest_area() const {
  double a = 0.0;
  for (double t : rest_areas_) a += t;
  return a;
}

std::string TriMesh::fingerprint() const {
  detail::Fnv1a h;
  for (const auto& v : vertices_) h.bytes(v.data(), 3 * sizeof(double));
  for (const auto& t : triangles_) h.bytes(t.data(), 3 * sizeof(int));
  return h.hex();
}

void check_state(const TriMesh& mesh, const State& state) {
  if (state.size() != 3 * static_cast<Eigen::Index>(mesh.vertex_count())) {
    fail(ErrorCode::InvalidArgument, "state has " + std::to_string(state.size()) + " coordinates, mesh expects " +
                                         std::to_string(3 * mesh.vertex_count()));
  }
}

double dihedral_angle(const TriMesh& mesh, const State& x, int h) {
  const Hinge& hinge = mesh.hinges().at(h);
  const Eigen::Vector3d xi = vertex_of(x, hinge.edge[0]);
  const Eigen::Vector3d xj = vertex_of(x, hinge.edge[1]);
  const Eigen::Vector3d xk = vertex_of(x, hinge.flaps[0]);
  const Eigen::Vector3d xl = vertex_of(x, hinge.flaps[1]);
  const Eigen::Vector3d e = xj - xi;
  const Eigen::Vector3d n1 = e.cross(xk - xi);
  const Eigen::Vector3d n2 = (xi - xj).cross(xl - xj);
  const double a1 = 0.5 * n1.norm();
  const double a2 = 0.5 * n2.norm();
  if (a1 < kMinDeformedArea || a2 < kMinDeformedArea) {
    fail(ErrorCode::DegenerateElement, "hinge " + std::to_string(h) + " has a degenerate incident triangle");
  }
  return std::atan2(n1.cross(n2).dot(e), n1.dot(n2) * e.norm());
}

// --- OBJ I/O ---------------------------------------------------------------

namespace {

bool parse_double(std::string_view tok, double& out) {
  const char* first = tok.data();
  const char* last = tok.data() + tok.size();
  auto res = std::from_chars(first, last, out);
  return res.ec == std::errc() && res.ptr == last;
}

bool parse_int(std::string_view tok, long& out) {
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return res.ec == std::errc() && res.ptr == tok.data() + tok.size();
}

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

[[noreturn]] void parse_fail(int line, const std::string& what) {
  fail(ErrorCode::Parse, "OBJ line " + std::to_string(line) + ": " + what);
}

}  // namespace

TriMesh parse_obj(const std::string& text) {
  std::vector<Eigen::Vector3d> verts;
  std::vector<std::array<int, 3>> tris;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line(raw);
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto toks = split_ws(line);
    if (toks.empty()) continue;
    if (toks[0] == "v") {
      if (toks.size() < 4) parse_fail(line_no, "vertex record needs 3 coordinates");
      Eigen::Vector3d p;
      for (int c = 0; c < 3; ++c) {
        if (!parse_double(toks[c + 1], p[c])) parse_fail(line_no, "bad coordinate '" + std::string(toks[c + 1]) + "'");
      }
      verts.push_back(p);
    } else if (toks[0] == "f") {
      if (toks.size() < 4) parse_fail(line_no, "face record needs at least 3 vertices");
      std::vector<int> face;
      for (std::size_t t = 1; t < toks.size(); ++t) {
        std::string_view ref = toks[t].substr(0, toks[t].find('/'));
        long idx = 0;
        if (!parse_int(ref, idx) || idx == 0) parse_fail(line_no, "bad vertex reference '" + std::string(toks[t]) + "'");
        const long resolved = idx > 0 ? idx - 1 : static_cast<long>(verts.size()) + idx;
        if (resolved < 0 || resolved >= static_cast<long>(verts.size())) {
          parse_fail(line_no, "vertex reference " + std::to_string(idx) + " out of range");
        }
        face.push_back(static_cast<int>(resolved));
      }
      for (std::size_t c = 1; c + 1 < face.size(); ++c) tris.push_back({face[0], face[c], face[c + 1]});
    }
    // Other records (vn, vt, o, g, s, usemtl, mtllib, l) are ignored.
  }
  if (verts.empty()) fail(ErrorCode::Parse, "OBJ contains no vertices");
  return TriMesh(std::move(verts), std::move(tris));
}

TriMesh load_obj(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_obj(ss.str());
}

std::string format_obj(const TriMesh& mesh, const State& state) {
  check_state(mesh, state);
  std::string out;
  out.reserve(40 * mesh.vertex_count() + 24 * mesh.triangle_count());
  char buf[128];
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    std::snprintf(buf, sizeof buf, "v %.9g %.9g %.9g\n", state[3 * v], state[3 * v + 1], state[3 * v + 2]);
    out += buf;
  }
  for (const auto& t : mesh.triangles()) {
    std::snprintf(buf, sizeof buf, "f %d %d %d\n", t[0] + 1, t[1] + 1, t[2] + 1);
    out += buf;
  }
  return out;
}

void write_obj_frame(const TriMesh& mesh, const State& state, const std::filesystem::path& path) {
  const std::string text = format_obj(mesh, state);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << text;
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace foldlab
