// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "foldlab/config.hpp"
#include "foldlab/strain_space.hpp"

namespace foldlab {

/// Header of report.csv.
inline constexpr const char* kReportColumns =
    "step,t,mass_displacement_m,E_total_J,E_membrane_J,E_bending_J,E_penalty_J,E_barrier_J,max_strain,newton_iters,"
    "wall_time_s";

/// One row per step, values with 17 significant digits.
std::string trajectory_csv(const Trajectory& trajectory);

/// kind, mode indices, coefficients, fingerprint, error, per-step t and
/// actuated energy; `extra` (a JSON object) is merged in.
std::string trajectory_meta(const Trajectory& trajectory, const std::string& extra_json = "{}");

/// frame_%04d.obj, report.csv and meta.json in `dir` (created if needed).
void write_trajectory(const TriMesh& mesh, const Trajectory& trajectory, const std::filesystem::path& dir,
                      const std::string& extra_json = "{}");

/// M-norm of mode i: sqrt(e^T M e).
double mode_mass_norm(const ShellModel& model, const ModeSet& modes, int i);

/// Linear-mode states at the mass displacements of `reference`'s steps.
Trajectory lm_baseline_matched(const ShellModel& model, const ModeSet& modes, int i, const Trajectory& reference);

/// LM and SSM states of one mode at the mass displacement b where the LM
/// path's max in-plane strain first exceeds `strain_threshold`.
struct MatchedComparison {
  double b = 0.0;
  double t_lm = 0.0;
  double t_ssm = 0.0;
  EnergyReport lm;
  EnergyReport ssm;
  bool found = false;
  std::string error;
};

MatchedComparison compare_at_strain(const ShellModel& model, const ModeSet& modes, int i, double strain_threshold,
                                    const SolverConfig& solver = {});

/// Per-state Newton timing over consecutive non-rigid modes.
struct BenchRow {
  std::string scene;
  int vertices = 0;
  int triangles = 0;
  int modes = 0;
  int states = 0;
  int failed_states = 0;
  double mean_state_s = 0.0;
  double max_state_s = 0.0;
  double modes_s = 0.0;
};

struct BenchOptions {
  /// First mode in free-sheet numbering (six rigid modes come first).
  int first_mode = 6;
  int last_mode = 15;
  int states = 10;
  /// States sit at step, 2 step, ... times the mode's default t_max.
  double step = 0.1;
  int threads = 1;
};

BenchRow bench_scene(const Scene& scene, const BenchOptions& options);
std::string bench_csv(const std::vector<BenchRow>& rows);

}  // namespace foldlab
