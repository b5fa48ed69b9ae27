// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <algorithm>
#include <filesystem>
#include <map>
#include <numbers>
#include <random>
#include <set>

#include "foldlab/error.hpp"
#include "foldlab/mesh.hpp"
#include "foldlab/scenes.hpp"
#include "support.hpp"

using namespace foldlab;

namespace {

std::set<std::array<int, 4>> hinge_set(const TriMesh& m) {
  std::set<std::array<int, 4>> s;
  for (const auto& h : m.hinges()) s.insert({h.edge[0], h.edge[1], h.flaps[0], h.flaps[1]});
  return s;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::Internal;
}

}  // namespace

TEST_CASE("unit square has one hinge and one boundary loop") {
  const TriMesh m = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3\nf 1 3 4\n");
  CHECK(m.hinge_count() == 1);
  REQUIRE(m.boundary_loops().size() == 1);
  CHECK(m.boundary_loops()[0].size() == 4);
  const auto& h = m.hinges()[0];
  CHECK(h.edge[0] == 0);
  CHECK(h.edge[1] == 2);
  CHECK(h.rest_edge_length == doctest::Approx(std::sqrt(2.0)));
  CHECK(h.rest_area_sum == doctest::Approx(1.0));
}

TEST_CASE("grid hinge count matches formula and brute-force edge enumeration") {
  for (int m : {1, 2, 3, 5, 8}) {
    const TriMesh mesh = make_square_sheet(1.0, m);
    std::map<std::pair<int, int>, int> count;
    for (const auto& t : mesh.triangles())
      for (int c = 0; c < 3; ++c) {
        const int a = t[c], b = t[(c + 1) % 3];
        ++count[{std::min(a, b), std::max(a, b)}];
      }
    const int interior = static_cast<int>(std::count_if(count.begin(), count.end(), [](auto& p) { return p.second == 2; }));
    CHECK(interior == 3 * m * m - 2 * m);
    CHECK(mesh.hinge_count() == interior);
  }
}

TEST_CASE("quad faces fan-triangulate to the same hinges") {
  const TriMesh quad = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n");
  const TriMesh tri = parse_obj("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3\nf 1 3 4\n");
  CHECK(hinge_set(quad) == hinge_set(tri));
  CHECK(quad.triangle_count() == 2);
}

TEST_CASE("obj parser accepts slashes, negative indices and comments") {
  const TriMesh m = parse_obj("# c\nvn 0 0 1\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1//1 2//1 -1//1\n");
  CHECK(m.triangle_count() == 1);
  CHECK(m.triangles()[0] == std::array<int, 3>{0, 1, 2});
}

TEST_CASE("mesh validation errors") {
  SUBCASE("parse error reports the line") {
    try {
      parse_obj("v 0 0 0\nv 1 0\n");
      FAIL("expected a parse error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Parse);
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  SUBCASE("non-manifold edge is named") {
    try {
      parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 -1 0\nv 0 0 1\nf 1 2 3\nf 2 1 4\nf 1 2 5\n");
      FAIL("expected a topology error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::Topology);
      CHECK(std::string(e.what()).find("(0, 1)") != std::string::npos);
    }
  }
  SUBCASE("degenerate triangle") {
    CHECK(code_of([] { parse_obj("v 0 0 0\nv 1 0 0\nv 2 0 0\nf 1 2 3\n"); }) == ErrorCode::DegenerateElement);
  }
  SUBCASE("index out of range") {
    CHECK(code_of([] { parse_obj("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 4\n"); }) == ErrorCode::Parse);
  }
}

TEST_CASE("dihedral angle of the tent configuration") {
  const std::vector<Eigen::Vector3d> V{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {0, 0, 1}};
  const TriMesh tent(V, {{0, 1, 2}, {1, 0, 3}});
  REQUIRE(tent.hinge_count() == 1);
  const State x = tent.rest_state();
  // Oracle: angle between the two face normals.
  const Eigen::Vector3d n1 = (V[1] - V[0]).cross(V[2] - V[0]).normalized();
  const Eigen::Vector3d n2 = (V[0] - V[1]).cross(V[3] - V[1]).normalized();
  const double theta = dihedral_angle(tent, x, 0);
  CHECK(std::abs(theta) == doctest::Approx(std::acos(n1.dot(n2))).epsilon(1e-12));
  CHECK(std::abs(theta) == doctest::Approx(std::numbers::pi / 2));

  State mirrored = x;
  for (int v = 0; v < 4; ++v) mirrored[3 * v + 2] = -mirrored[3 * v + 2];
  CHECK(dihedral_angle(tent, mirrored, 0) == doctest::Approx(-theta).epsilon(1e-12));
}

TEST_CASE("coplanar hinge has zero angle; degenerate flap is an error") {
  const TriMesh m = make_hinge_mesh();
  CHECK(dihedral_angle(m, m.rest_state(), 0) == 0.0);
  State x = m.rest_state();
  x.segment<3>(3 * m.hinges()[0].flaps[0]) = x.segment<3>(3 * m.hinges()[0].edge[0]);
  CHECK(code_of([&] { dihedral_angle(m, x, 0); }) == ErrorCode::DegenerateElement);
}

TEST_CASE("property: hinge set is independent of face order") {
  std::mt19937 rng(7);
  const TriMesh base = make_disc(0.1, 4);
  for (int trial = 0; trial < 10; ++trial) {
    auto tris = base.triangles();
    std::shuffle(tris.begin(), tris.end(), rng);
    const TriMesh shuffled(base.vertices(), tris);
    CHECK(hinge_set(shuffled) == hinge_set(base));
  }
}

TEST_CASE("property: dihedral angles are invariant under rigid motion") {
  std::mt19937 rng(11);
  const TriMesh m = make_square_sheet(0.2, 4);
  State x = m.rest_state() + test::random_vector(m.rest_state().size(), 0.01, rng);
  const CurvatureVector before = [&] {
    CurvatureVector k(m.hinge_count());
    for (int h = 0; h < m.hinge_count(); ++h) k[h] = dihedral_angle(m, x, h);
    return k;
  }();
  for (int trial = 0; trial < 20; ++trial) {
    const State y = test::transform_state(x, test::random_rotation(rng), test::random_vector(3, 1.0, rng));
    for (int h = 0; h < m.hinge_count(); ++h) CHECK(dihedral_angle(m, y, h) == doctest::Approx(before[h]).epsilon(1e-9));
  }
}

TEST_CASE("property: boundary loop lengths sum to the boundary edge count") {
  for (const TriMesh& m : {make_square_sheet(1.0, 6), make_disc(0.1, 5), make_life_flower(0.1, 12)}) {
    std::size_t total = 0;
    for (const auto& loop : m.boundary_loops()) total += loop.size();
    CHECK(total == static_cast<std::size_t>(m.boundary_edge_count()));
  }
  CHECK(make_life_flower(0.1, 12).boundary_loops().size() == 7);
}

TEST_CASE("obj frame round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "foldlab_mesh_test";
  std::filesystem::create_directories(dir);
  const TriMesh m = make_square_sheet(0.2, 4);
  write_obj_frame(m, m.rest_state(), dir / "rest.obj");
  const TriMesh back = load_obj(dir / "rest.obj");
  CHECK((back.rest_state() - m.rest_state()).cwiseAbs().maxCoeff() < 1e-8);

  std::mt19937 rng(3);
  const State folded = m.rest_state() + test::random_vector(m.rest_state().size(), 0.02, rng);
  write_obj_frame(m, folded, dir / "folded.obj");
  const TriMesh reread = load_obj(dir / "folded.obj");
  for (int h = 0; h < m.hinge_count(); ++h) {
    CHECK(std::abs(dihedral_angle(m, folded, h) - reread.hinges()[h].rest_angle) < 1e-7);
  }
  CHECK(code_of([&] { write_obj_frame(m, m.rest_state(), dir / "missing" / "x.obj"); }) == ErrorCode::Io);
  std::filesystem::remove_all(dir);
}

TEST_CASE("scene sizes") {
  const TriMesh disc = make_disc(0.1, 16);
  CHECK(disc.vertex_count() == 817);
  CHECK(disc.triangle_count() == 1536);
  const TriMesh sq = make_square_sheet(0.2, 40);
  CHECK(sq.vertex_count() == 1681);
  CHECK(sq.triangle_count() == 3200);
}
