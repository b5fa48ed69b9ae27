// SPDX-License-Identifier: Apache-2.0
#include "foldlab/config.hpp"

#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "foldlab/error.hpp"

namespace foldlab {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& what) { fail(ErrorCode::Parse, "config: " + what); }

void check_keys(const json& obj, const std::set<std::string>& allowed, const std::string& where) {
  if (!obj.is_object()) bad(where + " must be an object");
  for (const auto& [key, _] : obj.items()) {
    if (!allowed.count(key)) bad("unknown key '" + key + "' in " + where);
  }
}

double number(const json& obj, const char* key, double fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_number()) bad(std::string(key) + " must be a number");
  return v.get<double>();
}

double positive(const json& obj, const char* key, double fallback) {
  const double v = number(obj, key, fallback);
  if (!(v > 0)) bad(std::string(key) + " must be positive");
  return v;
}

int integer(const json& v, const std::string& what) {
  if (!v.is_number_integer()) bad(what + " must be an integer");
  return v.get<int>();
}

Eigen::Vector3d vec3(const json& v, const std::string& what) {
  if (!v.is_array() || v.size() != 3) bad(what + " must be an array of 3 numbers");
  Eigen::Vector3d out;
  for (int c = 0; c < 3; ++c) {
    if (!v[c].is_number()) bad(what + " must be an array of 3 numbers");
    out[c] = v[c].get<double>();
  }
  return out;
}

json vec3_json(const Eigen::Vector3d& v) { return json::array({v.x(), v.y(), v.z()}); }

CreaseSelector parse_crease(const json& j) {
  check_keys(j, {"hinges", "edges", "segments", "tolerance_m", "scale"}, "crease_edges entry");
  CreaseSelector s;
  s.scale = number(j, "scale", 1.0);
  if (!(s.scale >= 0)) bad("crease scale must be non-negative");
  s.tolerance = positive(j, "tolerance_m", 1e-6);
  if (j.contains("hinges")) {
    for (const auto& h : j.at("hinges")) s.hinges.push_back(integer(h, "hinge index"));
  }
  if (j.contains("edges")) {
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) bad("crease edge must be a vertex pair");
      s.edges.push_back({integer(e[0], "edge vertex"), integer(e[1], "edge vertex")});
    }
  }
  if (j.contains("segments")) {
    for (const auto& seg : j.at("segments")) {
      if (!seg.is_array() || seg.size() != 2) bad("crease segment must be two points");
      s.segments.push_back({vec3(seg[0], "segment point"), vec3(seg[1], "segment point")});
    }
  }
  return s;
}

Pin parse_pin(const json& j) {
  check_keys(j, {"vertex", "mask", "target", "weight"}, "pin");
  Pin p;
  if (!j.contains("vertex")) bad("pin needs a vertex");
  p.vertex = integer(j.at("vertex"), "pin vertex");
  if (j.contains("mask")) {
    const json& m = j.at("mask");
    if (!m.is_array() || m.size() != 3) bad("pin mask must have 3 entries");
    for (int c = 0; c < 3; ++c) {
      if (m[c].is_boolean()) {
        p.mask[c] = m[c].get<bool>();
      } else {
        p.mask[c] = integer(m[c], "pin mask entry") != 0;
      }
    }
  }
  // NaN marks "rest position"; resolved in penalties_for.
  p.target = j.contains("target") ? vec3(j.at("target"), "pin target") : Eigen::Vector3d::Constant(NAN);
  p.weight = number(j, "weight", 0.0);
  return p;
}

}  // namespace

Config parse_config(const std::string& json_text) {
  json root;
  try {
    root = json::parse(json_text);
  } catch (const json::parse_error& e) {
    bad(e.what());
  }
  check_keys(root, {"youngs_pa", "poisson", "thickness_m", "density_kg_m3", "crease_edges", "pins", "springs", "barrier",
                    "solver"},
             "config");
  Config c;
  c.youngs = positive(root, "youngs_pa", c.youngs);
  c.poisson = number(root, "poisson", c.poisson);
  if (!(c.poisson > -1 && c.poisson < 0.5)) bad("poisson must lie in (-1, 0.5)");
  c.thickness = positive(root, "thickness_m", c.thickness);
  c.density = positive(root, "density_kg_m3", c.density);
  if (root.contains("crease_edges")) {
    if (!root.at("crease_edges").is_array()) bad("crease_edges must be an array");
    for (const auto& e : root.at("crease_edges")) c.creases.push_back(parse_crease(e));
  }
  if (root.contains("pins")) {
    const json& p = root.at("pins");
    if (p.is_string()) {
      const auto s = p.get<std::string>();
      if (s == "321") {
        c.pin_preset = PinPreset::ThreeTwoOne;
      } else if (s == "none") {
        c.pin_preset = PinPreset::None;
      } else {
        bad("unknown pin preset '" + s + "'");
      }
    } else if (p.is_object()) {
      check_keys(p, {"preset", "weight"}, "pins");
      const auto s = p.value("preset", std::string("321"));
      if (s == "321") {
        c.pin_preset = PinPreset::ThreeTwoOne;
      } else if (s == "none") {
        c.pin_preset = PinPreset::None;
      } else {
        bad("unknown pin preset '" + s + "'");
      }
      c.pin_weight = number(p, "weight", 0.0);
    } else if (p.is_array()) {
      c.pin_preset = PinPreset::Explicit;
      for (const auto& e : p) c.pins.push_back(parse_pin(e));
    } else {
      bad("pins must be a preset name, an object or a list");
    }
  }
  if (root.contains("springs")) {
    if (!root.at("springs").is_array()) bad("springs must be an array");
    for (const auto& s : root.at("springs")) {
      check_keys(s, {"a", "b", "weight"}, "spring");
      if (!s.contains("a") || !s.contains("b")) bad("spring needs vertices a and b");
      c.springs.push_back({integer(s.at("a"), "spring vertex"), integer(s.at("b"), "spring vertex"), number(s, "weight", 0.0)});
    }
  }
  if (root.contains("barrier")) {
    const json& b = root.at("barrier");
    check_keys(b, {"enabled", "dhat_m", "stiffness"}, "barrier");
    if (b.contains("enabled")) {
      if (!b.at("enabled").is_boolean()) bad("barrier.enabled must be a boolean");
      c.barrier.enabled = b.at("enabled").get<bool>();
    }
    c.barrier.dhat = number(b, "dhat_m", 0.0);
    c.barrier.stiffness = number(b, "stiffness", 0.0);
  }
  if (root.contains("solver")) {
    const json& s = root.at("solver");
    check_keys(s, {"grad_tol", "max_newton_iters", "reg_init", "reg_growth", "armijo_c", "backtrack_factor", "min_step"},
               "solver");
    SolverConfig& sc = c.solver;
    sc.grad_tol = number(s, "grad_tol", sc.grad_tol);
    if (s.contains("max_newton_iters")) sc.max_newton_iters = integer(s.at("max_newton_iters"), "max_newton_iters");
    if (sc.max_newton_iters < 1) bad("max_newton_iters must be at least 1");
    sc.reg_init = number(s, "reg_init", sc.reg_init);
    sc.reg_growth = number(s, "reg_growth", sc.reg_growth);
    if (!(sc.reg_growth > 1)) bad("reg_growth must exceed 1");
    sc.armijo_c = number(s, "armijo_c", sc.armijo_c);
    if (!(sc.armijo_c > 0 && sc.armijo_c < 1)) bad("armijo_c must lie in (0, 1)");
    sc.backtrack_factor = number(s, "backtrack_factor", sc.backtrack_factor);
    if (!(sc.backtrack_factor > 0 && sc.backtrack_factor < 1)) bad("backtrack_factor must lie in (0, 1)");
    sc.min_step = positive(s, "min_step", sc.min_step);
  }
  return c;
}

Config load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const Config& c) {
  json root;
  root["youngs_pa"] = c.youngs;
  root["poisson"] = c.poisson;
  root["thickness_m"] = c.thickness;
  root["density_kg_m3"] = c.density;
  json creases = json::array();
  for (const auto& s : c.creases) {
    json e;
    e["scale"] = s.scale;
    if (!s.hinges.empty()) e["hinges"] = s.hinges;
    if (!s.edges.empty()) e["edges"] = s.edges;
    if (!s.segments.empty()) {
      json segs = json::array();
      for (const auto& seg : s.segments) segs.push_back(json::array({vec3_json(seg.a), vec3_json(seg.b)}));
      e["segments"] = segs;
      e["tolerance_m"] = s.tolerance;
    }
    creases.push_back(e);
  }
  root["crease_edges"] = creases;
  if (c.pin_preset == PinPreset::Explicit) {
    json pins = json::array();
    for (const auto& p : c.pins) {
      json e{{"vertex", p.vertex}, {"mask", {p.mask[0], p.mask[1], p.mask[2]}}, {"weight", p.weight}};
      if (p.target.allFinite()) e["target"] = vec3_json(p.target);
      pins.push_back(e);
    }
    root["pins"] = pins;
  } else {
    root["pins"] = json{{"preset", c.pin_preset == PinPreset::None ? "none" : "321"}, {"weight", c.pin_weight}};
  }
  json springs = json::array();
  for (const auto& s : c.springs) springs.push_back({{"a", s.a}, {"b", s.b}, {"weight", s.weight}});
  root["springs"] = springs;
  root["barrier"] = {{"enabled", c.barrier.enabled}, {"dhat_m", c.barrier.dhat}, {"stiffness", c.barrier.stiffness}};
  const SolverConfig& s = c.solver;
  root["solver"] = {{"grad_tol", s.grad_tol},         {"max_newton_iters", s.max_newton_iters},
                    {"reg_init", s.reg_init},         {"reg_growth", s.reg_growth},
                    {"armijo_c", s.armijo_c},         {"backtrack_factor", s.backtrack_factor},
                    {"min_step", s.min_step}};
  return root.dump(2);
}

std::vector<double> resolve_crease_scale(const TriMesh& mesh, const std::vector<CreaseSelector>& creases) {
  if (creases.empty()) return {};
  std::vector<double> scale(mesh.hinge_count(), 1.0);
  std::map<std::pair<int, int>, int> by_edge;
  for (int h = 0; h < mesh.hinge_count(); ++h) by_edge[{mesh.hinges()[h].edge[0], mesh.hinges()[h].edge[1]}] = h;
  for (const auto& sel : creases) {
    for (int h : sel.hinges) {
      if (h < 0 || h >= mesh.hinge_count()) fail(ErrorCode::InvalidArgument, "crease hinge " + std::to_string(h) + " does not exist");
      scale[h] = sel.scale;
    }
    for (auto [a, b] : sel.edges) {
      auto it = by_edge.find({std::min(a, b), std::max(a, b)});
      if (it == by_edge.end()) {
        fail(ErrorCode::InvalidArgument,
             "crease edge (" + std::to_string(a) + ", " + std::to_string(b) + ") is not an interior edge");
      }
      scale[it->second] = sel.scale;
    }
    if (!sel.segments.empty()) {
      for (int h : hinges_on_segments(mesh, sel.segments, sel.tolerance)) scale[h] = sel.scale;
    }
  }
  return scale;
}

ShellMaterial material_for(const TriMesh& mesh, const Config& config) {
  ShellMaterial m;
  m.youngs = config.youngs;
  m.poisson = config.poisson;
  m.thickness = config.thickness;
  m.density = config.density;
  m.crease_scale = resolve_crease_scale(mesh, config.creases);
  return m;
}

PenaltySet penalties_for(const TriMesh& mesh, const Config& config) {
  PenaltySet pen;
  const double w = config.default_penalty_weight();
  switch (config.pin_preset) {
    case PinPreset::ThreeTwoOne:
      pen.pins = pins_321(mesh, w);
      break;
    case PinPreset::None:
      break;
    case PinPreset::Explicit:
      for (Pin p : config.pins) {
        if (p.vertex < 0 || p.vertex >= mesh.vertex_count()) {
          fail(ErrorCode::InvalidArgument, "pin vertex " + std::to_string(p.vertex) + " does not exist");
        }
        if (!p.target.allFinite()) p.target = mesh.vertices()[p.vertex];
        if (p.weight <= 0) p.weight = w;
        pen.pins.push_back(p);
      }
      break;
  }
  for (Spring s : config.springs) {
    if (s.weight <= 0) s.weight = w;
    pen.springs.push_back(s);
  }
  pen.barrier = config.barrier;
  return pen;
}

ShellModel build_model(std::shared_ptr<const TriMesh> mesh, const Config& config) {
  const TriMesh& m = *mesh;
  return ShellModel(std::move(mesh), material_for(m, config), penalties_for(m, config));
}

std::vector<std::string> scene_names() { return {"hinge", "square", "square40", "disc", "origami", "life-flower"}; }

Scene make_scene(const std::string& name) {
  Scene s;
  s.name = name;
  if (name == "hinge") {
    s.description = "two triangles sharing one hinge, 10 cm square";
    s.mesh = std::make_shared<const TriMesh>(make_hinge_mesh(0.1));
  } else if (name == "square") {
    s.description = "20 cm square sheet, 21 x 21 vertices";
    s.mesh = std::make_shared<const TriMesh>(make_square_sheet(0.2, 20));
  } else if (name == "square40") {
    s.description = "20 cm square sheet, 41 x 41 vertices";
    s.mesh = std::make_shared<const TriMesh>(make_square_sheet(0.2, 40));
  } else if (name == "disc") {
    s.description = "disc of radius 10 cm, 16 rings";
    s.mesh = std::make_shared<const TriMesh>(make_disc(0.1, 16));
  } else if (name == "origami") {
    const double panel = 0.072;
    s.description = "3 x 3 panel twist pattern, 7.2 cm panels, creases at 0.1 stiffness";
    s.mesh = std::make_shared<const TriMesh>(make_origami_sheet(panel, 8));
    CreaseSelector sel;
    sel.segments = origami_twist_creases(panel);
    sel.scale = 0.1;
    sel.tolerance = 1e-6;
    s.config.creases.push_back(sel);
  } else if (name == "life-flower") {
    s.description = "disc of radius 10 cm with six petal cutouts";
    s.mesh = std::make_shared<const TriMesh>(make_life_flower(0.1, 16));
  } else {
    fail(ErrorCode::NotFound, "unknown scene '" + name + "'");
  }
  return s;
}

Scene load_scene_asset(const std::filesystem::path& dir, const std::string& name) {
  Scene s;
  s.name = name;
  s.mesh = std::make_shared<const TriMesh>(load_obj(dir / (name + ".obj")));
  const auto cfg = dir / (name + ".json");
  if (std::filesystem::exists(cfg)) s.config = load_config(cfg);
  return s;
}

void export_scene_assets(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  json manifest;
  manifest["format"] = "foldlab-assets";
  manifest["version"] = 1;
  json scenes = json::array();
  for (const auto& name : scene_names()) {
    const Scene scene = make_scene(name);
    write_obj_frame(*scene.mesh, scene.mesh->rest_state(), dir / (name + ".obj"));
    {
      std::ofstream out(dir / (name + ".json"), std::ios::binary | std::ios::trunc);
      if (!out) fail(ErrorCode::Io, "cannot write " + (dir / (name + ".json")).string());
      out << config_to_json(scene.config) << "\n";
    }
    // Fingerprint of the mesh as read back from the written file.
    const TriMesh reloaded = load_obj(dir / (name + ".obj"));
    scenes.push_back({{"name", name},
                      {"description", scene.description},
                      {"vertices", reloaded.vertex_count()},
                      {"triangles", reloaded.triangle_count()},
                      {"hinges", reloaded.hinge_count()},
                      {"fingerprint", reloaded.fingerprint()}});
  }
  manifest["scenes"] = scenes;
  std::ofstream out(dir / "manifest.json", std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + (dir / "manifest.json").string());
  out << manifest.dump(2) << "\n";
}

}  // namespace foldlab
