// SPDX-License-Identifier: Apache-2.0
#include "foldlab/shell_energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <set>
#include <span>

#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>

#include "barrier.hpp"
#include "dual2.hpp"
#include "fingerprint.hpp"
#include "foldlab/error.hpp"
#include "foldlab/modal.hpp"

namespace foldlab {

using detail::Dual2;
using detail::V3;

namespace {

constexpr double kMinHingeArea = 1e-14;

template <class T>
T membrane_energy(const std::array<V3<T>, 3>& p, const Eigen::Matrix2d& B, double area_thickness, double mu,
                  double lambda) {
  const V3<T> d1 = p[1] - p[0];
  const V3<T> d2 = p[2] - p[0];
  const T g00 = dot(d1, d1), g01 = dot(d1, d2), g11 = dot(d2, d2);
  // C = B^T G B with G the Gram matrix of the deformed edge vectors.
  const T c00 = (B(0, 0) * B(0, 0)) * g00 + (2.0 * B(0, 0) * B(1, 0)) * g01 + (B(1, 0) * B(1, 0)) * g11;
  const T c01 = (B(0, 0) * B(0, 1)) * g00 + (B(0, 0) * B(1, 1) + B(1, 0) * B(0, 1)) * g01 + (B(1, 0) * B(1, 1)) * g11;
  const T c11 = (B(0, 1) * B(0, 1)) * g00 + (2.0 * B(0, 1) * B(1, 1)) * g01 + (B(1, 1) * B(1, 1)) * g11;
  const T e00 = 0.5 * (c00 - 1.0);
  const T e01 = 0.5 * c01;
  const T e11 = 0.5 * (c11 - 1.0);
  const T tr = e00 + e11;
  const T psi = mu * (e00 * e00 + 2.0 * (e01 * e01) + e11 * e11) + (0.5 * lambda) * (tr * tr);
  return area_thickness * psi;
}

template <class T>
T dihedral(const V3<T>& xi, const V3<T>& xj, const V3<T>& xk, const V3<T>& xl) {
  using std::atan2;
  using std::sqrt;
  const V3<T> e = xj - xi;
  const V3<T> n1 = cross(e, xk - xi);
  const V3<T> n2 = cross(xi - xj, xl - xj);
  return atan2(dot(cross(n1, n2), e), dot(n1, n2) * sqrt(dot(e, e)));
}

double unwrap(double theta, double branch) { return branch + std::remainder(theta - branch, 2 * std::numbers::pi); }

V3<double> v3(const State& x, int v) { return {x[3 * v], x[3 * v + 1], x[3 * v + 2]}; }

void check_hinge(const TriMesh& mesh, const State& x, int h) {
  const Hinge& hinge = mesh.hinges()[h];
  const Eigen::Vector3d xi = vertex_of(x, hinge.edge[0]);
  const Eigen::Vector3d e = vertex_of(x, hinge.edge[1]) - xi;
  const double a1 = 0.5 * e.cross(vertex_of(x, hinge.flaps[0]) - xi).norm();
  const double a2 = 0.5 * e.cross(vertex_of(x, hinge.flaps[1]) - xi).norm();
  if (!(a1 >= kMinHingeArea && a2 >= kMinHingeArea)) {
    fail(ErrorCode::DegenerateElement, "hinge " + std::to_string(h) + " has a degenerate incident triangle");
  }
}

std::array<int, 4> hinge_vertices(const Hinge& h) { return {h.edge[0], h.edge[1], h.flaps[0], h.flaps[1]}; }

Eigen::Matrix2d green_strain(const TriMesh& mesh, const State& x, int t, const Eigen::Matrix2d& B) {
  const auto& tri = mesh.triangles()[t];
  Eigen::Matrix<double, 3, 2> Ds;
  Ds.col(0) = vertex_of(x, tri[1]) - vertex_of(x, tri[0]);
  Ds.col(1) = vertex_of(x, tri[2]) - vertex_of(x, tri[0]);
  const Eigen::Matrix<double, 3, 2> F = Ds * B;
  return 0.5 * (F.transpose() * F - Eigen::Matrix2d::Identity());
}

Eigen::Matrix2d rest_frame_inverse(const TriMesh& mesh, int t) {
  const auto& tri = mesh.triangles()[t];
  const auto& V = mesh.vertices();
  const Eigen::Vector3d e1 = V[tri[1]] - V[tri[0]];
  const Eigen::Vector3d e2 = V[tri[2]] - V[tri[0]];
  const Eigen::Vector3d t1 = e1.normalized();
  const Eigen::Vector3d t2 = e1.cross(e2).cross(e1).normalized();
  Eigen::Matrix2d Dm;
  Dm << e1.dot(t1), e2.dot(t1), e1.dot(t2), e2.dot(t2);
  return Dm.inverse();
}

double largest_magnitude_eigenvalue(const Eigen::Matrix2d& E) {
  const double mean = 0.5 * (E(0, 0) + E(1, 1));
  const double rad = std::sqrt(0.25 * (E(0, 0) - E(1, 1)) * (E(0, 0) - E(1, 1)) + E(0, 1) * E(0, 1));
  return std::max(std::abs(mean + rad), std::abs(mean - rad));
}

}  // namespace

struct ShellModel::Parts {
  double membrane = 0.0;
  double bending = 0.0;
  double penalty = 0.0;
  double barrier = 0.0;
};

std::vector<Pin> pins_321(const TriMesh& mesh, double weight) {
  const int n = mesh.vertex_count();
  if (n < 3) fail(ErrorCode::InvalidArgument, "3-2-1 pinning needs at least 3 vertices");
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& v : mesh.vertices()) centroid += v;
  centroid /= n;
  int a = 0;
  for (int v = 1; v < n; ++v) {
    if ((mesh.vertices()[v] - centroid).norm() < (mesh.vertices()[a] - centroid).norm() - 1e-12) a = v;
  }
  // Neighbours of a from the edge list.
  std::vector<int> nbrs;
  for (const auto& e : mesh.edges()) {
    if (e[0] == a) nbrs.push_back(e[1]);
    if (e[1] == a) nbrs.push_back(e[0]);
  }
  if (nbrs.size() < 2) fail(ErrorCode::Topology, "vertex nearest the centroid has fewer than two neighbours");
  const Eigen::Vector3d pa = mesh.vertices()[a];
  // b: neighbour most aligned with +x.
  int b = nbrs[0];
  for (int v : nbrs) {
    const Eigen::Vector3d d = (mesh.vertices()[v] - pa).normalized();
    const Eigen::Vector3d db = (mesh.vertices()[b] - pa).normalized();
    if (d.x() > db.x() + 1e-12) b = v;
  }
  // c completes a mesh triangle with a and b, so the three pins cannot
  // resist any hinge.
  const Eigen::Vector3d ab = (mesh.vertices()[b] - pa).normalized();
  int c = -1;
  double best = -1.0;
  for (const auto& t : mesh.triangles()) {
    if (std::find(t.begin(), t.end(), a) == t.end() || std::find(t.begin(), t.end(), b) == t.end()) continue;
    for (int v : t) {
      if (v == a || v == b) continue;
      const double s = ab.cross((mesh.vertices()[v] - pa).normalized()).norm();
      if (s > best + 1e-12) {
        best = s;
        c = v;
      }
    }
  }
  // Pin b along the in-plane direction orthogonal to ab (taken as y for axis-aligned sheets).
  const bool ab_along_x = std::abs(ab.x()) >= std::abs(ab.y());
  std::vector<Pin> pins;
  pins.push_back(Pin{a, {true, true, true}, pa, weight});
  pins.push_back(Pin{b, {!ab_along_x, ab_along_x, true}, mesh.vertices()[b], weight});
  pins.push_back(Pin{c, {false, false, true}, mesh.vertices()[c], weight});
  return pins;
}

ShellModel::ShellModel(std::shared_ptr<const TriMesh> mesh, ShellMaterial material, PenaltySet penalties)
    : mesh_(std::move(mesh)), material_(std::move(material)), penalties_(std::move(penalties)) {
  if (!mesh_) fail(ErrorCode::InvalidArgument, "null mesh");
  const auto& m = material_;
  if (!(m.youngs > 0)) fail(ErrorCode::InvalidArgument, "youngs modulus must be positive");
  if (!(m.thickness > 0)) fail(ErrorCode::InvalidArgument, "thickness must be positive");
  if (!(m.density > 0)) fail(ErrorCode::InvalidArgument, "density must be positive");
  if (!(m.poisson >= 0 && m.poisson < 0.5)) fail(ErrorCode::InvalidArgument, "poisson ratio must lie in [0, 0.5)");
  const int nh = mesh_->hinge_count();
  if (!m.crease_scale.empty() && static_cast<int>(m.crease_scale.size()) != nh) {
    fail(ErrorCode::InvalidArgument, "crease_scale has " + std::to_string(m.crease_scale.size()) +
                                         " entries, mesh has " + std::to_string(nh) + " hinges");
  }
  for (double s : m.crease_scale) {
    if (!(s > 0)) fail(ErrorCode::InvalidArgument, "crease_scale entries must be positive");
  }
  const int n = mesh_->vertex_count();
  for (const auto& p : penalties_.pins) {
    if (p.vertex < 0 || p.vertex >= n) fail(ErrorCode::InvalidArgument, "pin vertex " + std::to_string(p.vertex) + " out of range");
    if (!(p.weight > 0)) fail(ErrorCode::InvalidArgument, "pin weight must be positive");
  }
  for (const auto& s : penalties_.springs) {
    if (s.a < 0 || s.a >= n || s.b < 0 || s.b >= n) fail(ErrorCode::InvalidArgument, "spring vertex out of range");
    if (s.a == s.b) fail(ErrorCode::InvalidArgument, "spring endpoints must differ");
    if (!(s.weight > 0)) fail(ErrorCode::InvalidArgument, "spring weight must be positive");
  }
  if (penalties_.barrier.dhat <= 0) penalties_.barrier.dhat = 1e-3 * mesh_->diagonal();
  if (penalties_.barrier.stiffness <= 0) penalties_.barrier.stiffness = m.youngs * m.thickness * m.thickness * m.thickness;

  mass_ = lumped_mass(*mesh_, material_);
  stiffness_.resize(nh);
  hinge_weight_.resize(nh);
  for (int h = 0; h < nh; ++h) {
    const Hinge& hinge = mesh_->hinges()[h];
    stiffness_[h] = (m.crease_scale.empty() ? 1.0 : m.crease_scale[h]) * m.bending_modulus();
    hinge_weight_[h] = hinge.rest_edge_length * hinge.rest_edge_length / (hinge.rest_area_sum / 3.0);
  }
  rest_frame_inverse_.resize(mesh_->triangle_count());
  for (int t = 0; t < mesh_->triangle_count(); ++t) rest_frame_inverse_[t] = rest_frame_inverse(*mesh_, t);
  build_pattern();
}

ShellModel ShellModel::with_penalties(PenaltySet penalties) const {
  return ShellModel(mesh_, material_, std::move(penalties));
}

double ShellModel::default_grad_tol() const {
  return 1e-8 * material_.youngs * material_.thickness * mesh_->diagonal();
}

std::string ShellModel::fingerprint() const {
  detail::Fnv1a h;
  h.text(mesh_->fingerprint());
  h.value(material_.youngs);
  h.value(material_.poisson);
  h.value(material_.thickness);
  h.value(material_.density);
  for (double s : material_.crease_scale) h.value(s);
  for (const auto& p : penalties_.pins) {
    h.value(p.vertex);
    h.value(p.weight);
    h.bytes(p.target.data(), 3 * sizeof(double));
  }
  for (const auto& s : penalties_.springs) {
    h.value(s.a);
    h.value(s.b);
    h.value(s.weight);
  }
  h.value(penalties_.barrier.enabled);
  return h.hex();
}

void ShellModel::build_pattern() {
  const int n = mesh_->vertex_count();
  std::vector<std::set<int>> adj(n);
  auto link = [&](std::span<const int> verts) {
    for (int a : verts)
      for (int b : verts) adj[a].insert(b);
  };
  for (int v = 0; v < n; ++v) adj[v].insert(v);
  for (const auto& t : mesh_->triangles()) link(t);
  for (const auto& h : mesh_->hinges()) link(hinge_vertices(h));
  for (const auto& s : penalties_.springs) link(std::array<int, 2>{s.a, s.b});

  std::vector<Eigen::Triplet<double>> trips;
  for (int a = 0; a < n; ++a)
    for (int b : adj[a])
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) trips.emplace_back(3 * a + r, 3 * b + c, 0.0);
  pattern_.resize(3 * n, 3 * n);
  pattern_.setFromTriplets(trips.begin(), trips.end());
  pattern_.makeCompressed();

  const int* outer = pattern_.outerIndexPtr();
  const int* inner = pattern_.innerIndexPtr();
  auto slot = [&](int row, int col) {
    const int* first = inner + outer[col];
    const int* last = inner + outer[col + 1];
    const int* it = std::lower_bound(first, last, row);
    return static_cast<int>(it - inner);
  };
  auto fill = [&](std::span<const int> verts, std::vector<int>& out) {
    const int m = static_cast<int>(verts.size());
    for (int lc = 0; lc < 3 * m; ++lc)
      for (int lr = 0; lr < 3 * m; ++lr)
        out.push_back(slot(3 * verts[lr / 3] + lr % 3, 3 * verts[lc / 3] + lc % 3));
  };
  triangle_slots_.clear();
  hinge_slots_.clear();
  spring_slots_.clear();
  pin_slots_.clear();
  for (const auto& t : mesh_->triangles()) fill(t, triangle_slots_);
  for (const auto& h : mesh_->hinges()) fill(hinge_vertices(h), hinge_slots_);
  for (const auto& s : penalties_.springs) fill(std::array<int, 2>{s.a, s.b}, spring_slots_);
  for (const auto& p : penalties_.pins)
    for (int c = 0; c < 3; ++c) pin_slots_.push_back(slot(3 * p.vertex + c, 3 * p.vertex + c));
}

bool ShellModel::accumulate(const CurvatureVector& kbar, const State& x, Parts& parts, Eigen::VectorXd* grad,
                            SparseMatrix* hess, const CurvatureVector* branch) const {
  check_state(*mesh_, x);
  if (kbar.size() != mesh_->hinge_count()) {
    fail(ErrorCode::InvalidArgument, "curvature vector has " + std::to_string(kbar.size()) + " entries, mesh has " +
                                         std::to_string(mesh_->hinge_count()) + " hinges");
  }
  if (branch && branch->size() != mesh_->hinge_count()) fail(ErrorCode::InvalidArgument, "branch angles do not match the mesh");
  const bool derivs = grad || hess;
  if (grad) grad->setZero(dofs());
  double* hv = nullptr;
  if (hess) {
    *hess = pattern_;
    hv = hess->valuePtr();
    std::fill(hv, hv + hess->nonZeros(), 0.0);
  }
  const double mu = material_.lame_mu();
  const double lambda = material_.lame_lambda();

  const auto& tris = mesh_->triangles();
  for (int t = 0; t < static_cast<int>(tris.size()); ++t) {
    const auto& tri = tris[t];
    const double ah = mesh_->rest_areas()[t] * material_.thickness;
    if (!derivs) {
      parts.membrane += membrane_energy<double>({v3(x, tri[0]), v3(x, tri[1]), v3(x, tri[2])}, rest_frame_inverse_[t], ah,
                                                mu, lambda);
      continue;
    }
    const Dual2<9> w = membrane_energy<Dual2<9>>(
        {detail::variable_point<9>(vertex_of(x, tri[0]), 0), detail::variable_point<9>(vertex_of(x, tri[1]), 3),
         detail::variable_point<9>(vertex_of(x, tri[2]), 6)},
        rest_frame_inverse_[t], ah, mu, lambda);
    parts.membrane += w.v;
    if (grad)
      for (int l = 0; l < 9; ++l) (*grad)[3 * tri[l / 3] + l % 3] += w.g[l];
    if (hv) {
      const int* s = &triangle_slots_[81 * t];
      for (int c = 0; c < 9; ++c)
        for (int r = 0; r < 9; ++r) hv[s[9 * c + r]] += w.h(r, c);
    }
  }

  const auto& hinges = mesh_->hinges();
  for (int h = 0; h < static_cast<int>(hinges.size()); ++h) {
    check_hinge(*mesh_, x, h);
    const auto vs = hinge_vertices(hinges[h]);
    const double kw = stiffness_[h] * hinge_weight_[h];
    if (!derivs) {
      double theta = dihedral<double>(v3(x, vs[0]), v3(x, vs[1]), v3(x, vs[2]), v3(x, vs[3]));
      if (branch) theta = unwrap(theta, (*branch)[h]);
      const double d = theta - kbar[h];
      parts.bending += kw * d * d;
      continue;
    }
    const Dual2<12> theta = dihedral<Dual2<12>>(
        detail::variable_point<12>(vertex_of(x, vs[0]), 0), detail::variable_point<12>(vertex_of(x, vs[1]), 3),
        detail::variable_point<12>(vertex_of(x, vs[2]), 6), detail::variable_point<12>(vertex_of(x, vs[3]), 9));
    const double d = (branch ? unwrap(theta.v, (*branch)[h]) : theta.v) - kbar[h];
    parts.bending += kw * d * d;
    if (grad)
      for (int l = 0; l < 12; ++l) (*grad)[3 * vs[l / 3] + l % 3] += 2.0 * kw * d * theta.g[l];
    if (hv) {
      const Eigen::Matrix<double, 12, 12> H = 2.0 * kw * (theta.g * theta.g.transpose() + d * theta.h);
      const int* s = &hinge_slots_[144 * h];
      for (int c = 0; c < 12; ++c)
        for (int r = 0; r < 12; ++r) hv[s[12 * c + r]] += H(r, c);
    }
  }

  const auto& pins = penalties_.pins;
  for (std::size_t p = 0; p < pins.size(); ++p) {
    const Pin& pin = pins[p];
    for (int c = 0; c < 3; ++c) {
      if (!pin.mask[c]) continue;
      const double d = x[3 * pin.vertex + c] - pin.target[c];
      parts.penalty += pin.weight * d * d;
      if (grad) (*grad)[3 * pin.vertex + c] += 2.0 * pin.weight * d;
      if (hv) hv[pin_slots_[3 * p + c]] += 2.0 * pin.weight;
    }
  }

  const auto& springs = penalties_.springs;
  for (std::size_t k = 0; k < springs.size(); ++k) {
    const Spring& s = springs[k];
    const Eigen::Vector3d d = vertex_of(x, s.a) - vertex_of(x, s.b);
    parts.penalty += s.weight * d.squaredNorm();
    if (grad) {
      grad->segment<3>(3 * s.a) += 2.0 * s.weight * d;
      grad->segment<3>(3 * s.b) -= 2.0 * s.weight * d;
    }
    if (hv) {
      const int* sl = &spring_slots_[36 * k];
      for (int c = 0; c < 6; ++c)
        for (int r = 0; r < 6; ++r) {
          if (r % 3 != c % 3) continue;
          hv[sl[6 * c + r]] += ((r < 3) == (c < 3) ? 2.0 : -2.0) * s.weight;
        }
    }
  }

  if (penalties_.barrier.enabled) {
    const double dhat = penalties_.barrier.dhat;
    const double kappa = penalties_.barrier.stiffness;
    const auto pairs = detail::find_contact_pairs(*mesh_, x, dhat);
    std::vector<Eigen::Triplet<double>> trips;
    for (const auto& pair : pairs) {
      const double dist = detail::pair_distance_value(pair, x);
      if (!(dist > 0.0)) {
        parts.barrier = std::numeric_limits<double>::infinity();
        return false;
      }
      if (!derivs) {
        parts.barrier += detail::log_barrier(dist, dhat, kappa);
        continue;
      }
      const Dual2<12> b = detail::log_barrier(detail::pair_distance(pair, x), dhat, kappa);
      parts.barrier += b.v;
      if (grad)
        for (int l = 0; l < 12; ++l) (*grad)[3 * pair.verts[l / 3] + l % 3] += b.g[l];
      if (hess)
        for (int c = 0; c < 12; ++c)
          for (int r = 0; r < 12; ++r)
            if (b.h(r, c) != 0.0) trips.emplace_back(3 * pair.verts[r / 3] + r % 3, 3 * pair.verts[c / 3] + c % 3, b.h(r, c));
    }
    if (hess && !trips.empty()) {
      SparseMatrix extra(dofs(), dofs());
      extra.setFromTriplets(trips.begin(), trips.end());
      *hess += extra;
      hess->makeCompressed();
    }
  }
  return true;
}

EnergyReport ShellModel::energy(const CurvatureVector& kbar, const State& x, const CurvatureVector* branch) const {
  Parts parts;
  const bool ok = accumulate(kbar, x, parts, nullptr, nullptr, branch);
  EnergyReport r;
  r.membrane = parts.membrane;
  r.bending = parts.bending;
  r.penalty = parts.penalty;
  r.barrier = ok ? parts.barrier : std::numeric_limits<double>::infinity();
  r.total = ok ? r.membrane + r.bending + r.penalty + r.barrier : std::numeric_limits<double>::infinity();
  r.max_inplane_strain = max_inplane_strain(*mesh_, x);
  const Eigen::VectorXd u = x - mesh_->rest_state();
  r.mass_displacement = std::sqrt(0.5 * u.dot(mass_.cwiseProduct(u)));
  return r;
}

Eigen::VectorXd ShellModel::gradient(const CurvatureVector& kbar, const State& x) const {
  Parts parts;
  Eigen::VectorXd g;
  if (!accumulate(kbar, x, parts, &g, nullptr)) fail(ErrorCode::DegenerateElement, "gradient requested at interpenetrating state");
  return g;
}

SparseMatrix ShellModel::hessian(const CurvatureVector& kbar, const State& x) const {
  Parts parts;
  SparseMatrix H;
  if (!accumulate(kbar, x, parts, nullptr, &H)) fail(ErrorCode::DegenerateElement, "hessian requested at interpenetrating state");
  return H;
}

bool ShellModel::evaluate(const CurvatureVector& kbar, const State& x, double* energy, Eigen::VectorXd* gradient,
                          SparseMatrix* hessian, const CurvatureVector* branch) const {
  Parts parts;
  try {
    if (!accumulate(kbar, x, parts, gradient, hessian, branch)) return false;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::DegenerateElement) return false;
    throw;
  }
  const double total = parts.membrane + parts.bending + parts.penalty + parts.barrier;
  if (!std::isfinite(total)) return false;
  if (energy) *energy = total;
  return true;
}

Eigen::VectorXd ShellModel::mixed_derivative_times(const State& x, const Eigen::VectorXd& v) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(dofs());
  for (int h = 0; h < mesh_->hinge_count(); ++h) {
    if (v[h] == 0.0) continue;
    const auto g = dihedral_gradient(*mesh_, x, h);
    const auto vs = hinge_vertices(mesh_->hinges()[h]);
    const double s = -2.0 * stiffness_[h] * hinge_weight_[h] * v[h];
    for (int l = 0; l < 12; ++l) out[3 * vs[l / 3] + l % 3] += s * g[l];
  }
  return out;
}

Eigen::VectorXd ShellModel::mixed_derivative_transpose_times(const State& x, const Eigen::VectorXd& u) const {
  Eigen::VectorXd out(mesh_->hinge_count());
  for (int h = 0; h < mesh_->hinge_count(); ++h) {
    const auto g = dihedral_gradient(*mesh_, x, h);
    const auto vs = hinge_vertices(mesh_->hinges()[h]);
    double acc = 0.0;
    for (int l = 0; l < 12; ++l) acc += g[l] * u[3 * vs[l / 3] + l % 3];
    out[h] = -2.0 * stiffness_[h] * hinge_weight_[h] * acc;
  }
  return out;
}

CurvatureVector curvatures(const TriMesh& mesh, const State& x) {
  check_state(mesh, x);
  CurvatureVector k(mesh.hinge_count());
  for (int h = 0; h < mesh.hinge_count(); ++h) k[h] = dihedral_angle(mesh, x, h);
  return k;
}

CurvatureVector tracked_curvatures(const TriMesh& mesh, const State& x, const CurvatureVector& branch) {
  if (branch.size() != mesh.hinge_count()) fail(ErrorCode::InvalidArgument, "branch angles do not match the mesh");
  CurvatureVector k = curvatures(mesh, x);
  for (int h = 0; h < mesh.hinge_count(); ++h) k[h] = unwrap(k[h], branch[h]);
  return k;
}

double max_inplane_strain(const TriMesh& mesh, const State& x) {
  check_state(mesh, x);
  double worst = 0.0;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    worst = std::max(worst, largest_magnitude_eigenvalue(green_strain(mesh, x, t, rest_frame_inverse(mesh, t))));
  }
  return worst;
}

Eigen::Matrix<double, 12, 1> dihedral_gradient(const TriMesh& mesh, const State& x, int h) {
  check_hinge(mesh, x, h);
  const Hinge& hinge = mesh.hinges()[h];
  const Eigen::Vector3d xi = vertex_of(x, hinge.edge[0]);
  const Eigen::Vector3d xj = vertex_of(x, hinge.edge[1]);
  const Eigen::Vector3d xk = vertex_of(x, hinge.flaps[0]);
  const Eigen::Vector3d xl = vertex_of(x, hinge.flaps[1]);
  const Eigen::Vector3d e = xj - xi;
  const Eigen::Vector3d n1 = e.cross(xk - xi);
  const Eigen::Vector3d n2 = (xi - xj).cross(xl - xj);
  const double len = e.norm();
  const double q1 = n1.squaredNorm();
  const double q2 = n2.squaredNorm();
  Eigen::Matrix<double, 12, 1> g;
  g.segment<3>(0) = ((xj - xk).dot(e) / (len * q1)) * n1 + ((xj - xl).dot(e) / (len * q2)) * n2;
  g.segment<3>(3) = ((xk - xi).dot(e) / (len * q1)) * n1 + ((xl - xi).dot(e) / (len * q2)) * n2;
  g.segment<3>(6) = (-len / q1) * n1;
  g.segment<3>(9) = (-len / q2) * n2;
  return g;
}

}  // namespace foldlab
