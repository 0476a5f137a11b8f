// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <memory>
#include <string>
#include <vector>

#include "raybos/bos.hpp"
#include "raybos/config.hpp"
#include "raybos/core.hpp"
#include "raybos/grin.hpp"
#include "raybos/optics.hpp"
#include "raybos/sensor.hpp"

namespace raybos {

struct RunReport {
  long emitted = 0;
  long landed = 0;
  long lost = 0;
  long blocked_aperture = 0;
  long blocked_miss = 0;
  long blocked_tir = 0;
  long blocked_sensor_miss = 0;
  double wall_seconds = 0.0;
  int threads = 1;
  std::uint64_t config_hash = 0;

  long blocked_total() const {
    return blocked_aperture + blocked_miss + blocked_tir + blocked_sensor_miss;
  }
  bool accounting_ok() const { return emitted == landed + lost + blocked_total(); }
  std::string to_json_string() const;
};

// Fully resolved scene: config with every "auto" replaced by a value.
// Immutable during a run; workers only read it.
struct SceneSetup {
  std::vector<Vec3> sources;
  std::vector<Vec2> dot_positions;  // empty for particle sources
  std::shared_ptr<const GriddedField> field;  // null when medium is "none"
  StepParams step;
  double ambient_index = 1.0;
  double volume_center_z = 0.0;
  std::vector<OpticalElement> elements;
  ApertureDisk pupil;
  double lens_plane_z = 0.0;
  double focal_length = 0.0;
  double f_number = 0.0;
  SensorModel sensor;
  double d_tau = 0.0;
  double magnification = 0.0;
  BundleSpec bundle;
  double wavelength = 500e-9;
  BosParams bos_params;
  GridSpec grid;
  std::uint64_t config_hash = 0;
};

// Resolves geometry, focus, magnification, f-number, diffraction diameter
// and gain from the config. Deterministic: no randomness beyond the seeds
// already in the config.
SceneSetup build_scene_setup(const ExperimentConfig& config);

struct TraceOutputs {
  std::vector<DotHitStats> stats;  // per source point
  RunReport report;
  ImageBuffer image;  // empty unless image accumulation was requested
};

// Core parallel loop: bundles per source point, volume trace (optional),
// optics chain, sensor intersection, spot accumulation. Deterministic
// mode composites per-dot spot tiles in source order, which makes the
// image bit-identical for any worker count.
TraceOutputs run_trace(const SceneSetup& setup, bool with_field, bool accumulate_image,
                       const RunConfig& run);

struct RenderResult {
  ImageBuffer image;
  std::vector<std::uint16_t> quantized;
  RunReport report;
  double gain = 1.0;
  std::string image_path;  // empty when not written
};

// Full image pipeline; writes <out>/image.pgm and <out>/report.json when
// an output directory is configured.
RenderResult render(const ExperimentConfig& config);

struct BosRunResult {
  RunReport reference_report;
  RunReport gradient_report;
  std::vector<ScatteredDisplacement> scattered;  // sensor meters
  DisplacementField measured;     // in config units
  DisplacementField theoretical;  // in config units
  FieldMetrics metrics;
  double pixel_pitch = 0.0;
};

// Two identically seeded traces (without and with the density field),
// per-dot displacement extraction, gridding and comparison against the
// small-deflection prediction.
BosRunResult bos_run(const ExperimentConfig& config);

struct TraceDebugRecord {
  double xi = 0.0;
  RayState state;
};

// Per-step trajectory of a single ray of a single dot, for plotting.
std::vector<TraceDebugRecord> trace_debug(const ExperimentConfig& config, int dot_index,
                                          int ray_index);
void write_trace_debug_csv(const std::vector<TraceDebugRecord>& records, const std::string& path);

}  // namespace raybos
