// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "foldlab/scenes.hpp"
#include "foldlab/shell_energy.hpp"
#include "foldlab/solver.hpp"

namespace foldlab {

/// Hinges whose stiffness is multiplied by `scale`. Hinges can be named
/// directly, by edge vertex pairs, or by crease segments in the rest plane.
struct CreaseSelector {
  std::vector<int> hinges;
  std::vector<std::array<int, 2>> edges;
  std::vector<CreaseSegment> segments;
  double tolerance = 1e-6;  // m, for segments
  double scale = 1.0;
};

enum class PinPreset { ThreeTwoOne, None, Explicit };

/// Material, penalty and solver settings of one run.
///
/// JSON keys: youngs_pa, poisson, thickness_m, density_kg_m3, crease_edges,
/// pins ("321", "none", {"preset", "weight"} or a list of
/// {vertex, mask, target, weight}), springs ({a, b, weight}), barrier
/// ({enabled, dhat_m, stiffness}) and solver. Unknown keys are rejected.
struct Config {
  double youngs = 2.9e9;
  double poisson = 0.3;
  double thickness = 1e-3;
  double density = 1.0;
  std::vector<CreaseSelector> creases;
  PinPreset pin_preset = PinPreset::ThreeTwoOne;
  /// <= 0 selects youngs * thickness.
  double pin_weight = 0.0;
  std::vector<Pin> pins;
  std::vector<Spring> springs;
  BarrierSettings barrier;
  SolverConfig solver;

  double default_penalty_weight() const { return pin_weight > 0 ? pin_weight : youngs * thickness; }
};

Config parse_config(const std::string& json_text);
Config load_config(const std::filesystem::path& path);
std::string config_to_json(const Config& config);

/// Per-hinge stiffness scales for the mesh; errors name unknown hinges or edges.
std::vector<double> resolve_crease_scale(const TriMesh& mesh, const std::vector<CreaseSelector>& creases);

/// Material with crease scales resolved against the mesh.
ShellMaterial material_for(const TriMesh& mesh, const Config& config);

/// Pins, springs and barrier for the mesh; explicit pins without a target
/// are pinned to their rest position.
PenaltySet penalties_for(const TriMesh& mesh, const Config& config);

ShellModel build_model(std::shared_ptr<const TriMesh> mesh, const Config& config);

/// Named demo scene: mesh plus its default configuration.
struct Scene {
  std::string name;
  std::string description;
  std::shared_ptr<const TriMesh> mesh;
  Config config;
};

/// Names in a fixed order: hinge, square, square40, disc, origami, life-flower.
std::vector<std::string> scene_names();

/// Builds the named scene procedurally. Throws NotFound for unknown names.
Scene make_scene(const std::string& name);

/// Loads `<dir>/<name>.obj` (and `<name>.json` if present) as a scene.
Scene load_scene_asset(const std::filesystem::path& dir, const std::string& name);

/// Writes OBJ and config for every scene plus manifest.json with mesh fingerprints.
void export_scene_assets(const std::filesystem::path& dir);

}  // namespace foldlab
