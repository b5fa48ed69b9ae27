// SPDX-License-Identifier: Apache-2.0
#include "foldlab/modal.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <random>

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/Geometry>
#include <Eigen/SparseCholesky>
#include <json.hpp>

#include "foldlab/error.hpp"

namespace foldlab {

namespace {

static_assert(std::endian::native == std::endian::little, "mode files are written in native little-endian order");

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index arg = 0;
  v.cwiseAbs().maxCoeff(&arg);
  if (v[arg] < 0) v = -v;
}

ModeSet finalize(Eigen::VectorXd values, Eigen::MatrixXd vectors, const SparseMatrix& M) {
  for (Eigen::Index c = 0; c < vectors.cols(); ++c) {
    const double norm = std::sqrt(vectors.col(c).dot(M * vectors.col(c)));
    vectors.col(c) /= norm;
    fix_sign(vectors.col(c));
  }
  return ModeSet{std::move(values), std::move(vectors)};
}

// Y <- Y R^{-1} such that Y^T M Y = I.
void m_orthonormalize(Eigen::MatrixXd& Y, const SparseMatrix& M) {
  for (int pass = 0; pass < 2; ++pass) {
    const Eigen::MatrixXd G = Y.transpose() * (M * Y);
    Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (G + G.transpose()));
    if (llt.info() == Eigen::Success) {
      Y = llt.matrixU().solve<Eigen::OnTheRight>(Y);
      continue;
    }
    // Gram-Schmidt fallback for nearly dependent columns.
    for (Eigen::Index c = 0; c < Y.cols(); ++c) {
      for (Eigen::Index p = 0; p < c; ++p) Y.col(c) -= Y.col(p).dot(M * Y.col(c)) * Y.col(p);
      double nrm = std::sqrt(Y.col(c).dot(M * Y.col(c)));
      if (!(nrm > 1e-300)) {
        Y.col(c).setRandom();
        nrm = std::sqrt(Y.col(c).dot(M * Y.col(c)));
      }
      Y.col(c) /= nrm;
    }
  }
}

ModeSet dense_modes(const SparseMatrix& H, const SparseMatrix& M, int k) {
  const Eigen::MatrixXd Hd = Eigen::MatrixXd(H);
  const Eigen::MatrixXd Md = Eigen::MatrixXd(M);
  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (Hd + Hd.transpose()), 0.5 * (Md + Md.transpose()),
                                                                Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
  if (es.info() != Eigen::Success) fail(ErrorCode::Solver, "dense generalized eigensolve failed");
  return finalize(es.eigenvalues().head(k), es.eigenvectors().leftCols(k), M);
}

ModeSet shift_invert_modes(const SparseMatrix& H, const SparseMatrix& M, int k, const EigenOptions& opt) {
  const Eigen::Index n = H.rows();
  const Eigen::Index p = std::min<Eigen::Index>(n, std::max<Eigen::Index>(2 * k, k + 8));
  SparseMatrix K = H - opt.shift * M;
  K.makeCompressed();
  Eigen::SimplicialLDLT<SparseMatrix> ldlt(K);
  if (ldlt.info() != Eigen::Success) {
    fail(ErrorCode::Solver, "factorization of the shifted Hessian failed; the Hessian is singular, add pins");
  }
  const Eigen::VectorXd D = ldlt.vectorD();
  const double dmax = D.cwiseAbs().maxCoeff();
  if (!(D.cwiseAbs().minCoeff() > 1e-13 * dmax)) {
    fail(ErrorCode::Solver, "shifted Hessian is numerically singular (rigid null space?); add pins");
  }

  std::mt19937 rng(opt.seed);
  std::normal_distribution<double> normal;
  Eigen::MatrixXd X(n, p);
  for (Eigen::Index c = 0; c < p; ++c)
    for (Eigen::Index r = 0; r < n; ++r) X(r, c) = normal(rng);
  m_orthonormalize(X, M);

  const double h_scale = std::max(1e-300, H.cwiseAbs().sum() / static_cast<double>(n));
  Eigen::VectorXd theta;
  for (int it = 0; it < opt.max_iterations; ++it) {
    Eigen::MatrixXd Y = ldlt.solve(M * X);
    m_orthonormalize(Y, M);
    const Eigen::MatrixXd HY = H * Y;
    Eigen::MatrixXd A = Y.transpose() * HY;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(0.5 * (A + A.transpose()));
    theta = es.eigenvalues();
    X = Y * es.eigenvectors();
    const Eigen::MatrixXd HX = HY * es.eigenvectors();
    double worst = 0.0;
    for (int i = 0; i < k; ++i) {
      const Eigen::VectorXd MX = M * X.col(i);
      const double num = (HX.col(i) - theta[i] * MX).norm();
      const double den = HX.col(i).norm() + std::abs(theta[i]) * MX.norm() + 1e-14 * h_scale * X.col(i).norm();
      worst = std::max(worst, num / den);
    }
    if (worst < opt.tolerance) break;
    if (it + 1 == opt.max_iterations) {
      fail(ErrorCode::Solver, "subspace iteration did not converge (residual " + std::to_string(worst) + ")");
    }
  }
  return finalize(theta.head(k), X.leftCols(k), M);
}

SparseMatrix diagonal_matrix(const Eigen::VectorXd& d) {
  SparseMatrix M(d.size(), d.size());
  M.reserve(Eigen::VectorXi::Constant(d.size(), 1));
  for (Eigen::Index i = 0; i < d.size(); ++i) M.insert(i, i) = d[i];
  M.makeCompressed();
  return M;
}

}  // namespace

Eigen::VectorXd ModeSet::mode(int i) const {
  if (i < 0 || i >= size()) fail(ErrorCode::InvalidArgument, "mode index " + std::to_string(i) + " out of range [0, " + std::to_string(size()) + ")");
  return vectors.col(i);
}

Eigen::VectorXd lumped_mass(const TriMesh& mesh, const ShellMaterial& material) {
  Eigen::VectorXd m = Eigen::VectorXd::Zero(3 * mesh.vertex_count());
  const double rho_h = material.density * material.thickness;
  for (int t = 0; t < mesh.triangle_count(); ++t) {
    const double share = rho_h * mesh.rest_areas()[t] / 3.0;
    for (int v : mesh.triangles()[t])
      for (int c = 0; c < 3; ++c) m[3 * v + c] += share;
  }
  if (!(m.minCoeff() > 0)) fail(ErrorCode::Topology, "mesh has an isolated vertex with zero lumped mass");
  return m;
}

ModeSet eigenmodes(const SparseMatrix& H, const SparseMatrix& M, int k, const EigenOptions& options) {
  if (H.rows() != H.cols() || M.rows() != H.rows() || M.cols() != H.cols()) {
    fail(ErrorCode::InvalidArgument, "eigenmodes: H and M must be square and of equal size");
  }
  if (k < 0 || k > H.rows()) {
    fail(ErrorCode::InvalidArgument, "requested " + std::to_string(k) + " modes but the system has " +
                                         std::to_string(H.rows()) + " degrees of freedom");
  }
  if (k == 0) return ModeSet{Eigen::VectorXd(0), Eigen::MatrixXd(H.rows(), 0)};
  EigenMethod method = options.method;
  if (method == EigenMethod::Auto) {
    method = H.rows() < options.dense_threshold ? EigenMethod::Dense : EigenMethod::ShiftInvert;
  }
  if (method == EigenMethod::Dense) return dense_modes(H, M, k);
  return shift_invert_modes(H, M, k, options);
}

ModeSet eigenmodes(const SparseMatrix& H, const Eigen::VectorXd& mass_diagonal, int k, const EigenOptions& options) {
  return eigenmodes(H, diagonal_matrix(mass_diagonal), k, options);
}

ModeSet rest_modes(const ShellModel& model, int k, const EigenOptions& options) {
  const TriMesh& mesh = model.mesh();
  return eigenmodes(model.hessian(mesh.rest_angles(), mesh.rest_state()), model.mass(), k, options);
}

double normal_fraction(const TriMesh& mesh, const Eigen::VectorXd& mass, const Eigen::VectorXd& mode) {
  std::vector<Eigen::Vector3d> normals(mesh.vertex_count(), Eigen::Vector3d::Zero());
  const auto& V = mesh.vertices();
  for (const auto& t : mesh.triangles()) {
    const Eigen::Vector3d n = (V[t[1]] - V[t[0]]).cross(V[t[2]] - V[t[0]]);
    for (int v : t) normals[v] += n;
  }
  double normal = 0.0, total = 0.0;
  for (int v = 0; v < mesh.vertex_count(); ++v) {
    const Eigen::Vector3d d = mode.segment<3>(3 * v);
    const double m = mass[3 * v];
    const double dn = d.dot(normals[v].normalized());
    normal += m * dn * dn;
    total += m * d.squaredNorm();
  }
  return total > 0 ? normal / total : 0.0;
}

double rigid_fraction(const TriMesh& mesh, const Eigen::VectorXd& mass, const Eigen::VectorXd& mode) {
  const int n = mesh.vertex_count();
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& v : mesh.vertices()) centroid += v;
  centroid /= n;
  Eigen::MatrixXd R = Eigen::MatrixXd::Zero(3 * n, 6);
  for (int v = 0; v < n; ++v) {
    const Eigen::Vector3d r = mesh.vertices()[v] - centroid;
    for (int a = 0; a < 3; ++a) {
      R(3 * v + a, a) = 1.0;
      R.block<3, 1>(3 * v, 3 + a) = Eigen::Vector3d::Unit(a).cross(r);
    }
  }
  const SparseMatrix M = diagonal_matrix(mass);
  m_orthonormalize(R, M);
  const Eigen::VectorXd Me = mass.cwiseProduct(mode);
  const double total = mode.dot(Me);
  if (!(total > 0)) return 0.0;
  return (R.transpose() * Me).squaredNorm() / total;
}

std::vector<int> nonrigid_modes(const TriMesh& mesh, const Eigen::VectorXd& mass, const ModeSet& modes) {
  std::vector<int> out;
  for (int i = 0; i < modes.size(); ++i) {
    if (rigid_fraction(mesh, mass, modes.vectors.col(i)) < 0.5) out.push_back(i);
  }
  return out;
}

void save_modes(const ModeSet& modes, int vertex_count, const std::filesystem::path& path) {
  nlohmann::json header;
  header["format"] = "foldlab-modes";
  header["version"] = 1;
  header["n"] = vertex_count;
  header["dofs"] = modes.vectors.rows();
  header["k"] = modes.size();
  header["eigenvalues"] = std::vector<double>(modes.eigenvalues.data(), modes.eigenvalues.data() + modes.size());
  header["encoding"] = "f64le";
  header["layout"] = "column-major";
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
  out << header.dump() << '\n';
  out.write(reinterpret_cast<const char*>(modes.vectors.data()),
            static_cast<std::streamsize>(sizeof(double) * modes.vectors.size()));
  if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

ModeSet load_modes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot open " + path.string());
  std::string line;
  std::getline(in, line);
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::Parse, "bad mode file header: " + std::string(e.what()));
  }
  if (header.value("format", "") != "foldlab-modes") fail(ErrorCode::Parse, "not a foldlab mode file");
  const auto dofs = header.at("dofs").get<Eigen::Index>();
  const auto k = header.at("k").get<Eigen::Index>();
  const auto values = header.at("eigenvalues").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(values.size()) != k) fail(ErrorCode::Parse, "eigenvalue count does not match k");
  ModeSet modes;
  modes.eigenvalues = Eigen::Map<const Eigen::VectorXd>(values.data(), k);
  modes.vectors.resize(dofs, k);
  in.read(reinterpret_cast<char*>(modes.vectors.data()), static_cast<std::streamsize>(sizeof(double) * dofs * k));
  if (in.gcount() != static_cast<std::streamsize>(sizeof(double) * dofs * k)) {
    fail(ErrorCode::Parse, "mode file truncated");
  }
  return modes;
}

}  // namespace foldlab
