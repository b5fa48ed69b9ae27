// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <random>

#include "foldlab/error.hpp"
#include "foldlab/modal.hpp"
#include "foldlab/periodic.hpp"
#include "foldlab/scenes.hpp"
#include "support.hpp"

using namespace foldlab;

namespace {

std::shared_ptr<const TriMesh> square(int cells) { return std::make_shared<const TriMesh>(make_square_sheet(0.2, cells)); }

ShellModel periodic_model(const std::shared_ptr<const TriMesh>& m, TilingKind kind) {
  const ShellMaterial mat;
  PenaltySet p;
  p.pins = periodic_pins(*m, kind, mat.youngs * mat.thickness);
  return ShellModel(m, mat, p);
}

/// First reduced mode whose expansion is mostly non-rigid.
int first_nonrigid(const PeriodicReduction& r, const ShellModel& model, const ModeSet& modes) {
  ModeSet full;
  full.eigenvalues = modes.eigenvalues;
  full.vectors = r.map.P * modes.vectors;
  const auto idx = nonrigid_modes(model.mesh(), model.mass(), full);
  REQUIRE(!idx.empty());
  return idx.front();
}

}  // namespace

TEST_CASE("3x3 translation unit cell has 18 reduced variables") {
  const auto m = square(2);
  const PeriodicReduction r = build_translation_reduction(*m);
  CHECK(r.dimension() == 18);
  CHECK(r.pairs_x.size() == 3);
  CHECK(r.pairs_y.size() == 3);
  CHECK((r.expand(r.map.q_rest) - m->rest_state()).cwiseAbs().maxCoeff() < 1e-15);
  const auto T = r.periods(m->rest_state());
  CHECK((T[0] - Eigen::Vector3d(0.2, 0, 0)).norm() < 1e-15);
  CHECK((T[1] - Eigen::Vector3d(0, 0.2, 0)).norm() < 1e-15);
}

TEST_CASE("reflection rest offsets are the half side lengths") {
  const auto m = square(20);
  const PeriodicReduction r = build_reflection_reduction(*m);
  CHECK(r.map.q_rest[r.period_index] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK(r.map.q_rest[r.period_index + 1] == doctest::Approx(0.1).epsilon(1e-14));
  CHECK((r.expand(r.map.q_rest) - m->rest_state()).cwiseAbs().maxCoeff() < 1e-15);
  const auto T = r.periods(m->rest_state());
  CHECK(T[0].x() == doctest::Approx(0.2));
  CHECK(T[1].y() == doctest::Approx(0.2));
}

TEST_CASE("property: expansion and restriction are exactly adjoint") {
  std::mt19937 rng(4);
  for (TilingKind kind : {TilingKind::Translation, TilingKind::Reflection}) {
    const auto m = square(6);
    const PeriodicReduction r = build_reduction(*m, kind);
    const SparseMatrix PT = r.map.P.transpose();
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::VectorXd u = test::random_vector(r.dimension(), 1.0, rng);
      const Eigen::VectorXd v = test::random_vector(3 * m->vertex_count(), 1.0, rng);
      const double lhs = (r.map.P * u).dot(v), rhs = u.dot(PT * v);
      CHECK(std::abs(lhs - rhs) <= 1e-12 * std::max(1.0, std::abs(lhs)));
    }
  }
}

TEST_CASE("property: expanded states are exactly periodic and restrict back") {
  std::mt19937 rng(8);
  for (TilingKind kind : {TilingKind::Translation, TilingKind::Reflection}) {
    const auto m = square(6);
    const PeriodicReduction r = build_reduction(*m, kind);
    for (int trial = 0; trial < 10; ++trial) {
      const Eigen::VectorXd q = r.map.q_rest + test::random_vector(r.dimension(), 0.01, rng);
      const State x = r.expand(q);
      CHECK(periodicity_error(r, x) < 1e-15);
      CHECK((r.restrict_state(x) - q).cwiseAbs().maxCoeff() < 1e-12);
    }
  }
}

TEST_CASE("periodicity error detects a jittered slave vertex") {
  const auto m = square(6);
  for (TilingKind kind : {TilingKind::Translation, TilingKind::Reflection}) {
    const PeriodicReduction r = build_reduction(*m, kind);
    State x = m->rest_state();
    const int v = kind == TilingKind::Translation ? r.pairs_x[2][1] : r.right[2];
    x[3 * v] += 1e-6;
    CHECK(periodicity_error(r, x) == doctest::Approx(1e-6).epsilon(1e-6));
  }
}

TEST_CASE("reduced Hessian and mass are symmetric") {
  const auto m = square(6);
  for (TilingKind kind : {TilingKind::Translation, TilingKind::Reflection}) {
    const PeriodicReduction r = build_reduction(*m, kind);
    const ShellModel model = periodic_model(m, kind);
    const SparseMatrix H = model.hessian(m->rest_angles(), m->rest_state());
    const Eigen::MatrixXd Hr = Eigen::MatrixXd(SparseMatrix(r.map.P.transpose()) * H * r.map.P);
    CHECK((Hr - Hr.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * Hr.cwiseAbs().maxCoeff());
    const ModeSet modes = periodic_modes(r, model, 8);
    CHECK(modes.vectors.rows() == r.dimension());
    for (int i = 0; i < modes.size(); ++i) CHECK(modes.eigenvalues[i] > 0);
    const Eigen::VectorXd e = expand_mode(r, modes, 0);
    CHECK(e.size() == model.dofs());
    CHECK(periodicity_error(r, m->rest_state() + 1e-3 * e / e.cwiseAbs().maxCoeff()) < 1e-15);
  }
}

TEST_CASE("non-rectangular or unmatched boundaries are rejected") {
  const TriMesh disc = make_disc(0.1, 4);
  CHECK_THROWS_AS(build_translation_reduction(disc), Error);
  CHECK_THROWS_AS(build_reflection_reduction(disc), Error);
  const TriMesh uneven = make_grid(0.2, 0.2, 4, 4, [](int, int) { return false; });
  std::vector<Eigen::Vector3d> V = uneven.vertices();
  for (auto& p : V) {
    if (p.x() > 0.099 && std::abs(p.y()) < 0.09) p.y() += 0.01;
  }
  const TriMesh shifted(V, uneven.triangles());
  try {
    build_translation_reduction(shifted);
    FAIL("expected a topology error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::Topology);
  }
  CHECK(parse_tiling_kind("reflection") == TilingKind::Reflection);
  CHECK(to_string(TilingKind::Translation) == "translation");
  CHECK_THROWS_AS(parse_tiling_kind("glide"), Error);
}

TEST_CASE("tiling export: 1x1 is the input, counts scale and seams weld") {
  const auto m = square(20);
  for (TilingKind kind : {TilingKind::Translation, TilingKind::Reflection}) {
    const PeriodicReduction r = build_reduction(*m, kind);
    const TriMesh one = export_tiling(*m, r, m->rest_state(), 1, 1);
    CHECK(one.vertex_count() == m->vertex_count());
    CHECK(one.triangles() == m->triangles());
    CHECK((one.rest_state() - m->rest_state()).cwiseAbs().maxCoeff() < 1e-15);

    const TriMesh four = export_tiling(*m, r, m->rest_state(), 2, 2);
    CHECK(four.triangle_count() == 4 * m->triangle_count());
    CHECK(four.vertex_count() == 41 * 41);
    CHECK(four.boundary_loops().size() == 1);
    CHECK(four.total_rest_area() == doctest::Approx(4 * m->total_rest_area()));

    const TriMesh wide = export_tiling(*m, r, m->rest_state(), 3, 1);
    CHECK(wide.triangle_count() == 3 * m->triangle_count());
    CHECK(wide.vertex_count() == 61 * 21);
  }
}

TEST_CASE("translation fold: every state is exactly periodic and tiles without cracks") {
  const auto m = square(8);
  const PeriodicReduction r = build_translation_reduction(*m);
  const ShellModel model = periodic_model(m, TilingKind::Translation);
  const ModeSet modes = periodic_modes(r, model, 12);
  const int i = first_nonrigid(r, model, modes);
  FoldOptions o;
  o.steps = 4;
  const Trajectory tr = fold_periodic(model, r, modes, i, o);
  REQUIRE(tr.complete());
  CHECK(tr.kind == "periodic");
  for (const auto& s : tr.steps) CHECK(periodicity_error(r, s.x) <= 1e-10 * m->diagonal());
  const State& x = tr.steps.back().x;
  CHECK((x - m->rest_state()).cwiseAbs().maxCoeff() > 1e-3);
  const TriMesh tiled = export_tiling(*m, r, x, 2, 2);
  CHECK(tiled.vertex_count() == 17 * 17);
  CHECK(tiled.boundary_loops().size() == 1);
}

TEST_CASE("reflection fold keeps boundary vertices on the mirror planes") {
  const auto m = square(8);
  const PeriodicReduction r = build_reflection_reduction(*m);
  const ShellModel model = periodic_model(m, TilingKind::Reflection);
  const ModeSet modes = periodic_modes(r, model, 12);
  const int i = first_nonrigid(r, model, modes);
  FoldOptions o;
  o.steps = 3;
  const Trajectory tr = fold_periodic(model, r, modes, i, o);
  REQUIRE(tr.complete());
  for (const auto& s : tr.steps) {
    CHECK(periodicity_error(r, s.x) <= 1e-10 * m->diagonal());
    const Eigen::VectorXd q = r.restrict_state(s.x);
    const double a = q[r.period_index], b = q[r.period_index + 1];
    for (int v : r.left) CHECK(std::abs(s.x[3 * v] - (r.center.x() - a)) <= 1e-10 * m->diagonal());
    for (int v : r.right) CHECK(std::abs(s.x[3 * v] - (r.center.x() + a)) <= 1e-10 * m->diagonal());
    for (int v : r.bottom) CHECK(std::abs(s.x[3 * v + 1] - (r.center.y() - b)) <= 1e-10 * m->diagonal());
    for (int v : r.top) CHECK(std::abs(s.x[3 * v + 1] - (r.center.y() + b)) <= 1e-10 * m->diagonal());
  }
  const TriMesh tiled = export_tiling(*m, r, tr.steps.back().x, 2, 2);
  CHECK(tiled.vertex_count() == 17 * 17);
  CHECK(tiled.boundary_loops().size() == 1);
}
