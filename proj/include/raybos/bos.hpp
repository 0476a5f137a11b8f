// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "raybos/core.hpp"

namespace raybos {

// Regular 2-component displacement grid with a validity mask. dx/dy are
// stored in meters (sensor plane); conversions to pixels happen at the
// reporting layer.
struct DisplacementField {
  int nx = 0, ny = 0;
  double x0 = 0.0, y0 = 0.0;  // first node
  double dx = 0.0, dy = 0.0;  // node spacing, must be positive
  std::vector<Vec2> delta;    // size nx*ny, x-fastest
  std::vector<std::uint8_t> mask;  // 1 = valid

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  double node_x(int i) const { return x0 + i * dx; }
  double node_y(int j) const { return y0 + j * dy; }
  void validate() const;  // throws std::invalid_argument
};

struct BosParams {
  double magnification = 0.0;
  double z_d = 0.0;             // dot pattern to density-field center, m
  double gladstone_dale = 0.0;  // m^3/kg
  double ambient_index = 1.0;
  double depth = 0.0;           // density field thickness L_z, m

  void validate() const;
};

// 2-D density-gradient field (d rho/dx, d rho/dy) on a regular grid,
// bilinearly sampleable. This is the depth-averaged gradient entering the
// displacement formula.
struct GradientSlice {
  int nx = 0, ny = 0;
  double x0 = 0.0, y0 = 0.0;
  double dx = 0.0, dy = 0.0;
  std::vector<Vec2> grad;  // kg/m^4, x-fastest

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
  std::optional<Vec2> sample(double x, double y) const;  // nullopt outside the node hull
};

// Node grid a displacement field is evaluated or interpolated on.
struct GridSpec {
  int nx = 0, ny = 0;
  double x0 = 0.0, y0 = 0.0;
  double dx = 0.0, dy = 0.0;
  int bins_x = 0, bins_y = 0;  // coarse binning for scattered data; 0 = same as nodes
  int min_dots = 4;
};

// Small-deflection displacement prediction per node:
//   delta_x = (M * Z_D * K / n0) * grad_rho * L_z
// evaluated on the gradient slice's own nodes, or on an explicit grid.
DisplacementField theoretical_displacement(const GradientSlice& grad_rho, const BosParams& params);
DisplacementField theoretical_displacement(const GradientSlice& grad_rho, const BosParams& params,
                                           const GridSpec& grid);

// Accumulated sensor-hit statistics for one source point in one trace.
struct DotHitStats {
  Vec2 hit_sum;   // sum of sensor (u, v), m
  long landed = 0;
};

struct ScatteredDisplacement {
  Vec2 position;  // attachment location of the dot, m
  Vec2 delta;     // mean(gradient-trace hits) - mean(reference hits), m
  bool valid = false;
};

// Per-dot displacement between two identically seeded traces. Dots with
// zero surviving rays in either trace come back masked.
std::vector<ScatteredDisplacement> measure_dot_displacements(std::span<const Vec2> positions,
                                                             std::span<const DotHitStats> reference,
                                                             std::span<const DotHitStats> gradient);

// Bin-averages scattered dots into coarse cells, then bilinearly resamples
// the cell means onto the requested node grid. Nodes without full bilinear
// support fall back to the containing cell's mean or are masked. Throws if
// fewer than grid.min_dots dots are valid.
DisplacementField grid_displacements(std::span<const ScatteredDisplacement> scattered,
                                     const GridSpec& grid);

struct FieldMetrics {
  double rms_error = 0.0;        // over per-component differences
  double peak_abs_error = 0.0;   // max |component difference|
  double pearson_correlation = 0.0;  // over stacked components
  double peak_a = 0.0;           // max |vector| of field a on the joint mask
  double peak_b = 0.0;
  int nodes = 0;                 // joint-mask node count
};

// Metrics over the joint mask; fields must share the same grid.
FieldMetrics compare_fields(const DisplacementField& a, const DisplacementField& b);

// CSV export: header "x,y,dx,dy,mask", one node per row, SI units.
void write_displacement_csv(const DisplacementField& field, const std::string& path);
void write_metrics_csv(const FieldMetrics& metrics, const std::string& path,
                       const std::string& unit = "m");

}  // namespace raybos
