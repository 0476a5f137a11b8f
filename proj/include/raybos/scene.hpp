// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "raybos/core.hpp"

namespace raybos {

// Gladstone-Dale constant of air, m^3/kg.
inline constexpr double kGladstoneDaleAir = 2.26e-4;

// Refractive index of a gas of density rho (kg/m^3): n = K*rho + 1.
// Throws std::domain_error for rho < 0 or K <= 0.
double gladstone_dale(double rho, double gladstone_dale_k);

// Regular node-centered density grid. Values are stored x-fastest,
// matching the GVOL file layout.
struct DensityVolume {
  int nx = 0, ny = 0, nz = 0;
  Vec3 spacing;  // node spacing per axis, m
  Vec3 origin;   // position of node (0,0,0), m
  std::vector<float> rho;  // kg/m^3, size nx*ny*nz

  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * ny + j) * nx + i;
  }
  Aabb bounds() const {
    return {origin, origin + Vec3{(nx - 1) * spacing.x, (ny - 1) * spacing.y, (nz - 1) * spacing.z}};
  }
  // Throws std::invalid_argument on dims < 2, non-positive spacing,
  // wrong value count, or non-finite/negative densities.
  void validate() const;
};

// One 2-D density slice, used to build stacked volumes.
struct DensitySlice {
  int nx = 0, ny = 0;
  double dx = 0.0, dy = 0.0;
  Vec2 origin;
  std::vector<float> rho;  // x-fastest

  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }
};

// Repeats one 2-D slice at nz z-levels spaced dz apart, starting at z0.
// The result has d(rho)/dz = 0 identically.
DensityVolume stack_2d_slice(const DensitySlice& slice, int nz, double dz, double z0 = 0.0);

struct FieldSample {
  double n = 1.0;
  Vec3 grad;  // nabla n, 1/m
};

// Refractive-index field with gradient sampling. Immutable after
// construction; safe for concurrent reads.
class RefractiveField {
 public:
  virtual ~RefractiveField() = default;
  // Returns nullopt outside the bounding box; the caller treats the
  // outside region as uniform ambient medium.
  virtual std::optional<FieldSample> sample(const Vec3& p) const = 0;
  virtual Aabb bounds() const = 0;
};

// Gridded field: n = K*rho + 1 at the volume nodes plus node gradients
// (central differences inside, one-sided first order at the boundary),
// all sampled by trilinear interpolation.
class GriddedField final : public RefractiveField {
 public:
  GriddedField(const DensityVolume& volume, double gladstone_dale_k);

  std::optional<FieldSample> sample(const Vec3& p) const override;
  Aabb bounds() const override;

  // Node accessors used by tests and by the depth-averaging in bos.
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  int nz() const { return nz_; }
  Vec3 spacing() const { return spacing_; }
  Vec3 origin() const { return origin_; }
  double node_n(int i, int j, int k) const { return n_[index(i, j, k)]; }
  Vec3 node_grad(int i, int j, int k) const {
    const std::size_t q = index(i, j, k);
    return {gx_[q], gy_[q], gz_[q]};
  }

 private:
  std::size_t index(int i, int j, int k) const {
    return (static_cast<std::size_t>(k) * ny_ + j) * nx_ + i;
  }

  int nx_, ny_, nz_;
  Vec3 spacing_;
  Vec3 origin_;
  std::vector<double> n_, gx_, gy_, gz_;
};

// Closed-form field; used for convergence studies where an infinitely
// smooth n(x) is required.
class AnalyticField final : public RefractiveField {
 public:
  using IndexFn = std::function<double(const Vec3&)>;
  using GradFn = std::function<Vec3(const Vec3&)>;

  AnalyticField(IndexFn n, GradFn grad, const Aabb& box)
      : n_(std::move(n)), grad_(std::move(grad)), box_(box) {}

  std::optional<FieldSample> sample(const Vec3& p) const override {
    if (!box_.contains(p)) return std::nullopt;
    return FieldSample{n_(p), grad_(p)};
  }
  Aabb bounds() const override { return box_; }

 private:
  IndexFn n_;
  GradFn grad_;
  Aabb box_;
};

GriddedField build_refractive_field(const DensityVolume& volume, double gladstone_dale_k);

// Random dot target on the plane z = target_plane_z.
struct DotPattern {
  double target_plane_z = 0.0;
  std::vector<Vec2> dots;           // positions on the target plane, m
  double dot_diameter = 0.0;        // physical dot size, m (rendered as point sources)
  double dots_per_region = 0.0;     // areal density spec, dots per 32x32 sensor pixels
};

// Samples uniformly random dot positions over `extent` (centered on the
// axis) at `dots_per_region` dots per 32x32 sensor-pixel region. The
// region footprint on the target is (32 * pixel_pitch / magnification).
// Deterministic for a fixed seed.
DotPattern generate_dot_pattern(const Vec2& extent, double dots_per_region, double magnification,
                                double pixel_pitch, std::uint64_t seed, double target_plane_z = 0.0,
                                double dot_diameter = 1e-4);

// Same sampling with an explicit dot count instead of a density spec.
DotPattern generate_dot_pattern_count(const Vec2& extent, int count, std::uint64_t seed,
                                      double target_plane_z = 0.0, double dot_diameter = 1e-4);

struct ParticleField {
  std::vector<Vec3> positions;  // m
  std::vector<double> diameters;  // m
};

// Uniform random particles inside an axis-aligned box.
ParticleField generate_particle_field(const Aabb& box, int count, double diameter,
                                      std::uint64_t seed);

// GVOL density-volume file format: one text header line
//   GVOL1 Nx Ny Nz dx dy dz ox oy oz
// followed by Nx*Ny*Nz little-endian 32-bit floats, x-fastest.
DensityVolume load_density_volume(const std::string& path);
void save_density_volume(const DensityVolume& volume, const std::string& path);

}  // namespace raybos
