// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "foldlab/error.hpp"
#include "foldlab/modal.hpp"
#include "foldlab/report.hpp"
#include "foldlab/scenes.hpp"

using namespace foldlab;

namespace {

Trajectory two_step_trajectory() {
  Trajectory tr;
  tr.kind = "ssm";
  tr.mode_indices = {7};
  tr.coefficients = {1.0};
  tr.fingerprint = "abc";
  for (int s = 0; s < 2; ++s) {
    TrajectoryStep st;
    st.t = 0.5 * s;
    st.x = State::Zero(9);
    st.report.total = 1.0 + s;
    st.report.membrane = 0.25;
    st.report.bending = 0.75 + s;
    st.report.penalty = 0.0;
    st.report.barrier = 0.0;
    st.report.max_inplane_strain = 0.1 * s;
    st.report.mass_displacement = 0.125 * s;
    st.actuated_energy = 2.0 * s;
    st.stats.iterations = 3 * s;
    st.stats.wall_time_s = 0.5;
    tr.steps.push_back(st);
  }
  return tr;
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Scene small_scene() {
  Scene s;
  s.name = "small";
  s.mesh = std::make_shared<const TriMesh>(make_square_sheet(0.2, 8));
  return s;
}

}  // namespace

TEST_CASE("report csv golden output") {
  const std::string expected =
      "step,t,mass_displacement_m,E_total_J,E_membrane_J,E_bending_J,E_penalty_J,E_barrier_J,max_strain,newton_iters,"
      "wall_time_s\n"
      "0,0,0,1,0.25,0.75,0,0,0,0,0.5\n"
      "1,0.5,0.125,2,0.25,1.75,0,0,0.10000000000000001,3,0.5\n";
  CHECK(trajectory_csv(two_step_trajectory()) == expected);
}

TEST_CASE("meta carries the trajectory fields and merges extras") {
  Trajectory tr = two_step_trajectory();
  tr.error = "solver failed at step 2";
  const auto meta = nlohmann::json::parse(trajectory_meta(tr, R"({"scene": "square", "kind": "override"})"));
  CHECK(meta["format"] == "foldlab-trajectory");
  CHECK(meta["mode_indices"] == nlohmann::json::array({7}));
  CHECK(meta["fingerprint"] == "abc");
  CHECK(meta["complete"] == false);
  CHECK(meta["error"] == "solver failed at step 2");
  CHECK(meta["steps"] == 2);
  CHECK(meta["t"][1] == 0.5);
  CHECK(meta["actuated_energy_J"][1] == 2.0);
  CHECK(meta["solver_status"][0] == "converged");
  CHECK(meta["scene"] == "square");
  CHECK(meta["kind"] == "override");
  CHECK_THROWS_AS(trajectory_meta(tr, "[1]"), Error);
  try {
    trajectory_meta(tr, "{oops");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::InvalidArgument);
  }
}

TEST_CASE("write_trajectory produces frames that reload onto the mesh") {
  const Scene sc = make_scene("hinge");
  const ShellModel model = build_model(sc.mesh, sc.config);
  const ModeSet modes = rest_modes(model, 1);
  FoldOptions o;
  o.steps = 3;
  const Trajectory tr = fold_mode(model, modes, 0, o);
  REQUIRE(tr.complete());
  const auto dir = std::filesystem::temp_directory_path() / "foldlab_test_report";
  std::filesystem::remove_all(dir);
  write_trajectory(*sc.mesh, tr, dir, R"({"scene": "hinge"})");
  for (int s = 0; s <= 3; ++s) {
    char name[32];
    std::snprintf(name, sizeof name, "frame_%04d.obj", s);
    const TriMesh frame = load_obj(dir / name);
    CHECK(frame.triangles() == sc.mesh->triangles());
    CHECK((frame.rest_state() - tr.steps[s].x).cwiseAbs().maxCoeff() < 1e-9 * sc.mesh->diagonal());
  }
  CHECK(read_file(dir / "report.csv") == trajectory_csv(tr));
  CHECK(nlohmann::json::parse(read_file(dir / "meta.json"))["scene"] == "hinge");
  std::filesystem::remove_all(dir);
}

TEST_CASE("matched LM baseline has the mass displacements of the reference") {
  const auto m = std::make_shared<const TriMesh>(make_square_sheet(0.2, 8));
  const ShellModel model = build_model(m, Config{});
  const ModeSet modes = rest_modes(model, 12);
  const int i = nonrigid_modes(*m, model.mass(), modes).front();
  FoldOptions o;
  o.steps = 4;
  const Trajectory ssm = fold_mode(model, modes, i, o);
  REQUIRE(ssm.complete());
  const Trajectory lm = lm_baseline_matched(model, modes, i, ssm);
  REQUIRE(lm.steps.size() == ssm.steps.size());
  for (std::size_t s = 0; s < lm.steps.size(); ++s) {
    CHECK(lm.steps[s].report.mass_displacement ==
          doctest::Approx(ssm.steps[s].report.mass_displacement).epsilon(1e-12));
  }
}

TEST_CASE("strain-matched comparison lands on the threshold and the same displacement") {
  const auto m = std::make_shared<const TriMesh>(make_square_sheet(0.2, 8));
  const ShellModel model = build_model(m, Config{});
  const ModeSet modes = rest_modes(model, 12);
  const int i = nonrigid_modes(*m, model.mass(), modes).front();
  const MatchedComparison c = compare_at_strain(model, modes, i, 0.02);
  REQUIRE(c.found);
  CHECK(c.lm.max_inplane_strain == doctest::Approx(0.02).epsilon(1e-9));
  CHECK(c.ssm.mass_displacement == doctest::Approx(c.b).epsilon(1e-6));
  CHECK(c.ssm.max_inplane_strain < c.lm.max_inplane_strain);
  CHECK(c.ssm.total < c.lm.total);
}

TEST_CASE("bench reports every state of the requested modes") {
  BenchOptions o;
  o.first_mode = 6;
  o.last_mode = 7;
  o.states = 2;
  const BenchRow row = bench_scene(small_scene(), o);
  CHECK(row.scene == "small");
  CHECK(row.vertices == 81);
  CHECK(row.modes == 2);
  CHECK(row.states + row.failed_states == 4);
  CHECK(row.mean_state_s <= row.max_state_s);
  CHECK(row.modes_s > 0);
  const std::string csv = bench_csv({row});
  CHECK(csv.rfind("scene,vertices,triangles,modes,states,failed_states,mean_state_s,max_state_s,modes_s\nsmall,81,128,2,",
                  0) == 0);
  CHECK(bench_csv({}) == "scene,vertices,triangles,modes,states,failed_states,mean_state_s,max_state_s,modes_s\n");
}

TEST_CASE("bench rejects inconsistent options") {
  for (BenchOptions o : {BenchOptions{5, 7, 1, 0.1, 1}, BenchOptions{8, 7, 1, 0.1, 1}, BenchOptions{6, 7, 0, 0.1, 1},
                         BenchOptions{6, 7, 1, 0.0, 1}}) {
    try {
      bench_scene(small_scene(), o);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == ErrorCode::InvalidArgument);
    }
  }
}
