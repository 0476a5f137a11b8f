// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#include "raybos/config.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace raybos {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& what) {
  throw std::runtime_error("config: " + what);
}

Vec2 parse_vec2(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 2) fail(key + " must be a 2-element array");
  return {j[0].get<double>(), j[1].get<double>()};
}

Vec3 parse_vec3(const json& j, const std::string& key) {
  if (!j.is_array() || j.size() != 3) fail(key + " must be a 3-element array");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

// "auto" (or null) maps to 0, meaning "derive at setup time".
double parse_auto_or_number(const json& j, const std::string& key) {
  if (j.is_string()) {
    if (j.get<std::string>() == "auto") return 0.0;
    fail(key + ": expected a number or \"auto\"");
  }
  return j.get<double>();
}

SourceConfig parse_source(const json& j) {
  SourceConfig s;
  s.type = j.value("type", "dots");
  if (s.type == "dots") {
    if (j.contains("extent_m")) s.extent = parse_vec2(j.at("extent_m"), "source.extent_m");
    s.dots_per_region = j.value("density_per_32px_region", s.dots_per_region);
    s.count = j.value("count", s.count);
    s.dot_diameter = j.value("dot_diameter_m", s.dot_diameter);
    s.seed = j.value("seed", s.seed);
  } else if (s.type == "particles") {
    s.particle_count = j.value("count", 0);
    s.particle_diameter = j.value("diameter_m", s.particle_diameter);
    s.seed = j.value("seed", s.seed);
    if (j.contains("box_lo_m")) s.particle_box.lo = parse_vec3(j.at("box_lo_m"), "source.box_lo_m");
    if (j.contains("box_hi_m")) s.particle_box.hi = parse_vec3(j.at("box_hi_m"), "source.box_hi_m");
  } else {
    fail("unknown source type '" + s.type + "'");
  }
  return s;
}

MediumConfig parse_medium(const json& j) {
  MediumConfig m;
  m.type = j.value("type", "none");
  if (m.type != "none" && m.type != "gvol" && m.type != "uniform_gradient_slab" &&
      m.type != "gaussian_blob_slab")
    fail("unknown medium type '" + m.type + "'");
  m.path = j.value("path", m.path);
  m.rho0 = j.value("rho0_kg_m3", m.rho0);
  if (j.contains("grad_kg_m4")) m.grad = parse_vec2(j.at("grad_kg_m4"), "medium.grad_kg_m4");
  m.amplitude = j.value("amplitude_kg_m3", m.amplitude);
  m.sigma = j.value("sigma_m", m.sigma);
  if (j.contains("extent_m")) m.extent = parse_vec2(j.at("extent_m"), "medium.extent_m");
  m.depth = j.value("depth_m", m.depth);
  if (j.contains("nodes")) {
    const auto& n = j.at("nodes");
    if (!n.is_array() || n.size() != 3) fail("medium.nodes must be [nx, ny, nz]");
    m.nx = n[0].get<int>();
    m.ny = n[1].get<int>();
    m.nz = n[2].get<int>();
  }
  return m;
}

ElementConfig parse_element(const json& j) {
  ElementConfig e;
  e.type = j.value("type", "");
  if (e.type != "aperture" && e.type != "thin_lens" && e.type != "singlet" &&
      e.type != "mirror_plane")
    fail("unknown optics element type '" + e.type + "'");
  e.f_number = j.value("f_number", e.f_number);
  e.radius = j.value("radius_m", e.radius);
  e.focal_length = j.value("focal_length_m", e.focal_length);
  e.diameter = j.value("diameter_m", e.diameter);
  e.r1 = j.value("r1_m", e.r1);
  e.r2 = j.value("r2_m", e.r2);
  e.thickness = j.value("thickness_m", e.thickness);
  e.glass_index = j.value("glass_index", e.glass_index);
  if (j.contains("z_m")) {
    e.has_z = true;
    e.z = j.at("z_m").get<double>();
  }
  return e;
}

}  // namespace

ExperimentConfig parse_config_json(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& err) {
    fail(std::string("invalid JSON: ") + err.what());
  }

  ExperimentConfig cfg;
  if (j.contains("scene")) {
    const auto& scene = j.at("scene");
    if (scene.contains("source")) cfg.source = parse_source(scene.at("source"));
    if (scene.contains("medium")) cfg.medium = parse_medium(scene.at("medium"));
    cfg.gladstone_dale = scene.value("gladstone_dale_m3_kg", cfg.gladstone_dale);
    cfg.ambient_rho = scene.value("ambient_rho_kg_m3", cfg.ambient_rho);
  }
  if (j.contains("geometry")) {
    const auto& g = j.at("geometry");
    cfg.geometry.z_dot_to_volume = g.value("z_dot_to_volume_m", cfg.geometry.z_dot_to_volume);
    cfg.geometry.z_volume_to_lens = g.value("z_volume_to_lens_m", cfg.geometry.z_volume_to_lens);
  }
  if (j.contains("optics")) {
    for (const auto& e : j.at("optics")) cfg.optics.push_back(parse_element(e));
  }
  if (j.contains("sensor")) {
    const auto& s = j.at("sensor");
    if (s.contains("resolution")) {
      const auto& r = s.at("resolution");
      if (!r.is_array() || r.size() != 2) fail("sensor.resolution must be [W, H]");
      cfg.sensor.width = r[0].get<int>();
      cfg.sensor.height = r[1].get<int>();
    }
    cfg.sensor.pitch = s.value("pitch_m", cfg.sensor.pitch);
    cfg.sensor.bit_depth = s.value("bit_depth", cfg.sensor.bit_depth);
    if (s.contains("gain")) cfg.sensor.gain = parse_auto_or_number(s.at("gain"), "sensor.gain");
    if (s.contains("distance_m"))
      cfg.sensor.distance = parse_auto_or_number(s.at("distance_m"), "sensor.distance_m");
    cfg.sensor.window_sigmas = s.value("spot_window_sigmas", cfg.sensor.window_sigmas);
    cfg.sensor.diffraction_pi_factor =
        s.value("diffraction_pi_factor", cfg.sensor.diffraction_pi_factor);
    cfg.sensor.f_number_override = s.value("f_number", cfg.sensor.f_number_override);
  }
  if (j.contains("bundle")) {
    const auto& b = j.at("bundle");
    cfg.bundle.rays_per_source = b.value("rays_per_source", cfg.bundle.rays_per_source);
    const std::string sampling = b.value("sampling", "stratified");
    if (sampling == "stratified")
      cfg.bundle.sampling = ApertureSampling::kStratified;
    else if (sampling == "uniform-random")
      cfg.bundle.sampling = ApertureSampling::kUniformRandom;
    else
      fail("bundle.sampling must be 'stratified' or 'uniform-random'");
    cfg.bundle.seed = b.value("seed", cfg.bundle.seed);
    cfg.bundle.wavelength = b.value("wavelength_m", cfg.bundle.wavelength);
  }
  if (j.contains("trace")) {
    const auto& t = j.at("trace");
    cfg.trace.delta_xi = t.value("delta_xi_m", cfg.trace.delta_xi);
    cfg.trace.max_steps = t.value("max_steps", cfg.trace.max_steps);
  }
  if (j.contains("bos")) {
    const auto& b = j.at("bos");
    if (b.contains("magnification"))
      cfg.bos.magnification = parse_auto_or_number(b.at("magnification"), "bos.magnification");
    if (b.contains("grid_nodes")) {
      const auto& g = b.at("grid_nodes");
      if (!g.is_array() || g.size() != 2) fail("bos.grid_nodes must be [nx, ny]");
      cfg.bos.grid_nx = g[0].get<int>();
      cfg.bos.grid_ny = g[1].get<int>();
    }
    if (b.contains("grid_extent_m"))
      cfg.bos.grid_extent = parse_vec2(b.at("grid_extent_m"), "bos.grid_extent_m");
    cfg.bos.bins_x = b.value("bins_x", cfg.bos.bins_x);
    cfg.bos.bins_y = b.value("bins_y", cfg.bos.bins_y);
    cfg.bos.min_dots = b.value("min_dots", cfg.bos.min_dots);
    cfg.bos.units = b.value("units", cfg.bos.units);
    if (cfg.bos.units != "px" && cfg.bos.units != "m") fail("bos.units must be 'px' or 'm'");
  }
  if (j.contains("run")) {
    const auto& r = j.at("run");
    cfg.run.threads = r.value("threads", cfg.run.threads);
    cfg.run.deterministic = r.value("deterministic", cfg.run.deterministic);
    cfg.run.out_dir = r.value("out_dir", cfg.run.out_dir);
    cfg.run.write_images = r.value("write_images", cfg.run.write_images);
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config_json(buffer.str());
}

void ExperimentConfig::validate() const {
  if (source.type != "dots" && source.type != "particles") fail("exactly one source type required");
  if (source.type == "dots") {
    if (source.extent.x <= 0.0 || source.extent.y <= 0.0) fail("source extent must be positive");
    if (source.count < 0 && source.dots_per_region <= 0.0)
      fail("source density must be positive");
  } else if (source.particle_count <= 0) {
    fail("particle source needs a positive count");
  }
  if (medium.type == "gvol") {
    if (medium.path.empty()) fail("gvol medium needs a path");
    if (!std::filesystem::exists(medium.path)) fail("gvol file not found: " + medium.path);
  }
  if (medium.type != "none") {
    if (medium.depth <= 0.0) fail("medium depth must be positive");
    if (medium.type != "gvol" && (medium.nx < 2 || medium.ny < 2 || medium.nz < 2))
      fail("medium grid must have at least 2 nodes per axis");
  }
  if (gladstone_dale <= 0.0) fail("Gladstone-Dale constant must be positive");
  if (ambient_rho < 0.0) fail("ambient density must be >= 0");
  if (geometry.z_dot_to_volume <= 0.0 || geometry.z_volume_to_lens <= 0.0)
    fail("geometry distances must be positive");
  if (optics.empty()) fail("optics chain must not be empty");
  for (const auto& e : optics) {
    if (e.type == "thin_lens" && e.focal_length == 0.0) fail("thin lens needs a focal length");
    if (e.type == "singlet" && e.thickness <= 0.0) fail("singlet needs a positive thickness");
    if ((e.type == "thin_lens" || e.type == "singlet") && e.diameter <= 0.0)
      fail("lens needs a positive diameter");
    if (e.type == "aperture" && e.radius <= 0.0 && e.f_number <= 0.0)
      fail("aperture needs radius_m or f_number");
  }
  if (sensor.width < 1 || sensor.height < 1) fail("sensor resolution must be positive");
  if (sensor.pitch <= 0.0) fail("sensor pitch must be positive");
  if (sensor.bit_depth != 8 && sensor.bit_depth != 10 && sensor.bit_depth != 12 &&
      sensor.bit_depth != 16)
    fail("sensor bit depth must be one of 8, 10, 12, 16");
  if (bundle.rays_per_source < 1) fail("rays_per_source must be >= 1");
  if (bundle.wavelength <= 0.0) fail("wavelength must be positive");
  if (bos.grid_nx < 2 || bos.grid_ny < 2) fail("bos grid must have at least 2x2 nodes");
  if (bos.grid_extent.x <= 0.0 || bos.grid_extent.y <= 0.0)
    fail("bos grid extent must be positive");
}

std::uint64_t ExperimentConfig::physics_hash() const {
  // Canonical serialization of everything except run controls; nlohmann
  // objects keep keys sorted, so the dump is stable.
  json j;
  j["source"] = {{"type", source.type},
                 {"extent", {source.extent.x, source.extent.y}},
                 {"density", source.dots_per_region},
                 {"count", source.count},
                 {"dot_diameter", source.dot_diameter},
                 {"seed", source.seed},
                 {"particle_count", source.particle_count},
                 {"particle_diameter", source.particle_diameter},
                 {"box", {source.particle_box.lo.x, source.particle_box.lo.y,
                          source.particle_box.lo.z, source.particle_box.hi.x,
                          source.particle_box.hi.y, source.particle_box.hi.z}}};
  j["medium"] = {{"type", medium.type},   {"path", medium.path},
                 {"rho0", medium.rho0},   {"grad", {medium.grad.x, medium.grad.y}},
                 {"amp", medium.amplitude}, {"sigma", medium.sigma},
                 {"extent", {medium.extent.x, medium.extent.y}},
                 {"depth", medium.depth}, {"nodes", {medium.nx, medium.ny, medium.nz}}};
  j["constants"] = {{"K", gladstone_dale}, {"ambient_rho", ambient_rho}};
  j["geometry"] = {{"z_d", geometry.z_dot_to_volume}, {"z_a", geometry.z_volume_to_lens}};
  j["optics"] = json::array();
  for (const auto& e : optics) {
    j["optics"].push_back({{"type", e.type},
                           {"f_number", e.f_number},
                           {"radius", e.radius},
                           {"focal_length", e.focal_length},
                           {"diameter", e.diameter},
                           {"r1", e.r1},
                           {"r2", e.r2},
                           {"thickness", e.thickness},
                           {"glass_index", e.glass_index},
                           {"z", e.has_z ? e.z : -1.0}});
  }
  j["sensor"] = {{"w", sensor.width},
                 {"h", sensor.height},
                 {"pitch", sensor.pitch},
                 {"bits", sensor.bit_depth},
                 {"gain", sensor.gain},
                 {"distance", sensor.distance},
                 {"window", sensor.window_sigmas},
                 {"pi_factor", sensor.diffraction_pi_factor},
                 {"f_number", sensor.f_number_override}};
  j["bundle"] = {{"rays", bundle.rays_per_source},
                 {"sampling", bundle.sampling == ApertureSampling::kStratified ? 0 : 1},
                 {"seed", bundle.seed},
                 {"wavelength", bundle.wavelength}};
  j["trace"] = {{"delta_xi", trace.delta_xi}, {"max_steps", trace.max_steps}};
  j["bos"] = {{"magnification", bos.magnification},
              {"grid", {bos.grid_nx, bos.grid_ny}},
              {"extent", {bos.grid_extent.x, bos.grid_extent.y}},
              {"bins", {bos.bins_x, bos.bins_y}},
              {"min_dots", bos.min_dots},
              {"units", bos.units}};

  const std::string dump = j.dump();
  std::uint64_t hash = 0xcbf29ce484222325ULL;  // FNV-1a
  for (const unsigned char ch : dump) {
    hash ^= ch;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace raybos
