// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "raybos/core.hpp"
#include "raybos/raygen.hpp"

namespace raybos {

struct SourceConfig {
  std::string type = "dots";  // "dots" | "particles"
  // dots
  Vec2 extent{0.02, 0.02};    // target extent, m
  double dots_per_region = 20.0;  // per 32x32 sensor pixels
  int count = -1;             // >= 0 overrides the density spec
  double dot_diameter = 1e-4;
  std::uint64_t seed = 1;
  // particles
  Aabb particle_box;
  int particle_count = 0;
  double particle_diameter = 5e-6;
};

struct MediumConfig {
  std::string type = "none";  // "none" | "gvol" | "uniform_gradient_slab" | "gaussian_blob_slab"
  std::string path;           // gvol file
  double rho0 = 1.225;        // kg/m^3
  Vec2 grad{0.0, 0.0};        // uniform slab gradient, kg/m^4
  double amplitude = 0.5;     // blob peak density above rho0, kg/m^3
  double sigma = 0.004;       // blob radius parameter, m
  Vec2 extent{0.032, 0.032};  // slab width, m
  double depth = 0.01;        // L_z, m
  int nx = 33, ny = 33, nz = 5;
};

struct GeometryConfig {
  double z_dot_to_volume = 0.25;   // Z_D: target plane to volume center, m
  double z_volume_to_lens = 0.73;  // Z_A: volume center to first element plane, m
};

struct ElementConfig {
  std::string type;  // "aperture" | "thin_lens" | "singlet" | "mirror_plane"
  double f_number = 0.0;      // aperture sized as EFL / (2 f#) when radius unset
  double radius = 0.0;        // aperture opening, m
  double focal_length = 0.0;  // thin lens, m
  double diameter = 0.0;      // clear diameter, m
  double r1 = 0.0, r2 = 0.0;  // singlet curvature radii, m; 0 = flat
  double thickness = 0.0;     // singlet center thickness, m
  double glass_index = 1.5;
  bool has_z = false;
  double z = 0.0;  // absolute axial position override, m
};

struct SensorConfig {
  int width = 256, height = 256;
  double pitch = 10e-6;
  int bit_depth = 16;
  double gain = 0.0;      // <= 0: auto-calibrate on a reference dot
  double distance = 0.0;  // from last element, m; <= 0: autofocus on the target plane
  double window_sigmas = 4.0;
  bool diffraction_pi_factor = true;
  double f_number_override = 0.0;  // 0 = derive from aperture and focal length
};

struct BundleConfig {
  int rays_per_source = 10000;
  ApertureSampling sampling = ApertureSampling::kStratified;
  std::uint64_t seed = 1234;
  double wavelength = 500e-9;
};

struct TraceConfig {
  double delta_xi = 0.0;  // <= 0: min(grid spacing) / 2
  int max_steps = 0;      // <= 0: derived from the box diagonal
};

struct BosConfig {
  double magnification = 0.0;  // <= 0: measured from a calibration trace
  int grid_nx = 21, grid_ny = 21;
  Vec2 grid_extent{0.028, 0.028};  // centered on the axis at the volume plane, m
  int bins_x = 0, bins_y = 0;       // 0 = same as grid nodes
  int min_dots = 4;
  std::string units = "px";  // metric reporting unit: "px" | "m"
};

struct RunConfig {
  int threads = 0;  // 0 = hardware concurrency
  bool deterministic = true;
  std::string out_dir;
  bool write_images = true;
};

struct ExperimentConfig {
  SourceConfig source;
  MediumConfig medium;
  double gladstone_dale = 2.26e-4;  // m^3/kg
  double ambient_rho = 1.225;       // kg/m^3
  GeometryConfig geometry;
  std::vector<ElementConfig> optics;
  SensorConfig sensor;
  BundleConfig bundle;
  TraceConfig trace;
  BosConfig bos;
  RunConfig run;

  void validate() const;  // throws std::runtime_error with a message

  // Hash of the physics-relevant configuration (everything except run
  // controls), so reruns and different worker counts agree on it.
  std::uint64_t physics_hash() const;
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config_json(const std::string& json_text);

}  // namespace raybos
