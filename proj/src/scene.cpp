// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#include "raybos/scene.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace raybos {

double gladstone_dale(double rho, double gladstone_dale_k) {
  if (rho < 0.0) throw std::domain_error("gladstone_dale: negative density");
  if (gladstone_dale_k <= 0.0) throw std::domain_error("gladstone_dale: K must be positive");
  return gladstone_dale_k * rho + 1.0;
}

void DensityVolume::validate() const {
  if (nx < 2 || ny < 2 || nz < 2)
    throw std::invalid_argument("DensityVolume: dims must be >= 2 in each axis");
  if (spacing.x <= 0.0 || spacing.y <= 0.0 || spacing.z <= 0.0)
    throw std::invalid_argument("DensityVolume: spacing must be positive");
  if (rho.size() != static_cast<std::size_t>(nx) * ny * nz)
    throw std::invalid_argument("DensityVolume: rho size does not match dims");
  for (const float v : rho) {
    if (!std::isfinite(v) || v < 0.0f)
      throw std::invalid_argument("DensityVolume: densities must be finite and >= 0");
  }
}

DensityVolume stack_2d_slice(const DensitySlice& slice, int nz, double dz, double z0) {
  if (nz < 2) throw std::invalid_argument("stack_2d_slice: nz must be >= 2");
  if (dz <= 0.0) throw std::invalid_argument("stack_2d_slice: dz must be positive");
  DensityVolume vol;
  vol.nx = slice.nx;
  vol.ny = slice.ny;
  vol.nz = nz;
  vol.spacing = {slice.dx, slice.dy, dz};
  vol.origin = {slice.origin.x, slice.origin.y, z0};
  vol.rho.resize(static_cast<std::size_t>(slice.nx) * slice.ny * nz);
  for (int k = 0; k < nz; ++k) {
    std::copy(slice.rho.begin(), slice.rho.end(),
              vol.rho.begin() + static_cast<std::size_t>(k) * slice.nx * slice.ny);
  }
  vol.validate();
  return vol;
}

GriddedField::GriddedField(const DensityVolume& volume, double gladstone_dale_k)
    : nx_(volume.nx), ny_(volume.ny), nz_(volume.nz), spacing_(volume.spacing),
      origin_(volume.origin) {
  volume.validate();
  const std::size_t count = volume.rho.size();
  n_.resize(count);
  for (std::size_t q = 0; q < count; ++q)
    n_[q] = gladstone_dale(static_cast<double>(volume.rho[q]), gladstone_dale_k);

  gx_.resize(count);
  gy_.resize(count);
  gz_.resize(count);
  // Central differences inside, one-sided first order on the faces.
  auto diff = [](double lo, double hi, double h) { return (hi - lo) / h; };
  for (int k = 0; k < nz_; ++k) {
    for (int j = 0; j < ny_; ++j) {
      for (int i = 0; i < nx_; ++i) {
        const std::size_t q = index(i, j, k);
        if (i == 0)
          gx_[q] = diff(n_[index(0, j, k)], n_[index(1, j, k)], spacing_.x);
        else if (i == nx_ - 1)
          gx_[q] = diff(n_[index(nx_ - 2, j, k)], n_[index(nx_ - 1, j, k)], spacing_.x);
        else
          gx_[q] = diff(n_[index(i - 1, j, k)], n_[index(i + 1, j, k)], 2.0 * spacing_.x);
        if (j == 0)
          gy_[q] = diff(n_[index(i, 0, k)], n_[index(i, 1, k)], spacing_.y);
        else if (j == ny_ - 1)
          gy_[q] = diff(n_[index(i, ny_ - 2, k)], n_[index(i, ny_ - 1, k)], spacing_.y);
        else
          gy_[q] = diff(n_[index(i, j - 1, k)], n_[index(i, j + 1, k)], 2.0 * spacing_.y);
        if (k == 0)
          gz_[q] = diff(n_[index(i, j, 0)], n_[index(i, j, 1)], spacing_.z);
        else if (k == nz_ - 1)
          gz_[q] = diff(n_[index(i, j, nz_ - 2)], n_[index(i, j, nz_ - 1)], spacing_.z);
        else
          gz_[q] = diff(n_[index(i, j, k - 1)], n_[index(i, j, k + 1)], 2.0 * spacing_.z);
      }
    }
  }
}

Aabb GriddedField::bounds() const {
  return {origin_, origin_ + Vec3{(nx_ - 1) * spacing_.x, (ny_ - 1) * spacing_.y,
                                  (nz_ - 1) * spacing_.z}};
}

std::optional<FieldSample> GriddedField::sample(const Vec3& p) const {
  if (!bounds().contains(p)) return std::nullopt;
  const double qx = (p.x - origin_.x) / spacing_.x;
  const double qy = (p.y - origin_.y) / spacing_.y;
  const double qz = (p.z - origin_.z) / spacing_.z;
  // Clamp the cell so points on the far faces still interpolate.
  const int i = std::min(static_cast<int>(qx), nx_ - 2);
  const int j = std::min(static_cast<int>(qy), ny_ - 2);
  const int k = std::min(static_cast<int>(qz), nz_ - 2);
  const double fx = qx - i;
  const double fy = qy - j;
  const double fz = qz - k;

  const std::size_t q000 = index(i, j, k);
  const std::size_t q100 = q000 + 1;
  const std::size_t q010 = q000 + nx_;
  const std::size_t q110 = q010 + 1;
  const std::size_t q001 = q000 + static_cast<std::size_t>(nx_) * ny_;
  const std::size_t q101 = q001 + 1;
  const std::size_t q011 = q001 + nx_;
  const std::size_t q111 = q011 + 1;

  const double w000 = (1 - fx) * (1 - fy) * (1 - fz);
  const double w100 = fx * (1 - fy) * (1 - fz);
  const double w010 = (1 - fx) * fy * (1 - fz);
  const double w110 = fx * fy * (1 - fz);
  const double w001 = (1 - fx) * (1 - fy) * fz;
  const double w101 = fx * (1 - fy) * fz;
  const double w011 = (1 - fx) * fy * fz;
  const double w111 = fx * fy * fz;

  auto lerp = [&](const std::vector<double>& g) {
    return w000 * g[q000] + w100 * g[q100] + w010 * g[q010] + w110 * g[q110] + w001 * g[q001] +
           w101 * g[q101] + w011 * g[q011] + w111 * g[q111];
  };
  return FieldSample{lerp(n_), {lerp(gx_), lerp(gy_), lerp(gz_)}};
}

GriddedField build_refractive_field(const DensityVolume& volume, double gladstone_dale_k) {
  return GriddedField(volume, gladstone_dale_k);
}

DotPattern generate_dot_pattern(const Vec2& extent, double dots_per_region, double magnification,
                                double pixel_pitch, std::uint64_t seed, double target_plane_z,
                                double dot_diameter) {
  if (extent.x <= 0.0 || extent.y <= 0.0)
    throw std::invalid_argument("generate_dot_pattern: extent must be positive");
  if (dots_per_region <= 0.0)
    throw std::invalid_argument("generate_dot_pattern: density spec must be positive");
  if (magnification <= 0.0 || pixel_pitch <= 0.0)
    throw std::invalid_argument("generate_dot_pattern: magnification and pitch must be positive");
  // Target-side footprint of one 32x32 sensor-pixel region.
  const double region_side = 32.0 * pixel_pitch / magnification;
  const double density = dots_per_region / (region_side * region_side);
  const int count = static_cast<int>(std::llround(density * extent.x * extent.y));
  DotPattern pattern =
      generate_dot_pattern_count(extent, count, seed, target_plane_z, dot_diameter);
  pattern.dots_per_region = dots_per_region;
  return pattern;
}

DotPattern generate_dot_pattern_count(const Vec2& extent, int count, std::uint64_t seed,
                                      double target_plane_z, double dot_diameter) {
  if (extent.x <= 0.0 || extent.y <= 0.0)
    throw std::invalid_argument("generate_dot_pattern_count: extent must be positive");
  if (count < 0) throw std::invalid_argument("generate_dot_pattern_count: negative count");
  DotPattern pattern;
  pattern.target_plane_z = target_plane_z;
  pattern.dot_diameter = dot_diameter;
  pattern.dots.reserve(count);
  constexpr std::uint64_t kDotStream = 0xd07;
  for (int i = 0; i < count; ++i) {
    CounterRng rng(seed, kDotStream, static_cast<std::uint64_t>(i));
    pattern.dots.push_back({rng.uniform(-0.5 * extent.x, 0.5 * extent.x),
                            rng.uniform(-0.5 * extent.y, 0.5 * extent.y)});
  }
  return pattern;
}

ParticleField generate_particle_field(const Aabb& box, int count, double diameter,
                                      std::uint64_t seed) {
  if (count < 0) throw std::invalid_argument("generate_particle_field: negative count");
  ParticleField field;
  field.positions.reserve(count);
  field.diameters.assign(count, diameter);
  constexpr std::uint64_t kParticleStream = 0x9a7;
  for (int i = 0; i < count; ++i) {
    CounterRng rng(seed, kParticleStream, static_cast<std::uint64_t>(i));
    field.positions.push_back({rng.uniform(box.lo.x, box.hi.x), rng.uniform(box.lo.y, box.hi.y),
                               rng.uniform(box.lo.z, box.hi.z)});
  }
  return field;
}

namespace {

float float_from_le(const unsigned char b[4]) {
  const std::uint32_t u = static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
                          (static_cast<std::uint32_t>(b[2]) << 16) |
                          (static_cast<std::uint32_t>(b[3]) << 24);
  return std::bit_cast<float>(u);
}

void float_to_le(float v, unsigned char b[4]) {
  const std::uint32_t u = std::bit_cast<std::uint32_t>(v);
  b[0] = static_cast<unsigned char>(u & 0xff);
  b[1] = static_cast<unsigned char>((u >> 8) & 0xff);
  b[2] = static_cast<unsigned char>((u >> 16) & 0xff);
  b[3] = static_cast<unsigned char>((u >> 24) & 0xff);
}

}  // namespace

DensityVolume load_density_volume(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_density_volume: cannot open " + path);
  std::string header;
  if (!std::getline(in, header))
    throw std::runtime_error("load_density_volume: missing header in " + path);

  std::istringstream hs(header);
  std::string magic;
  DensityVolume vol;
  hs >> magic >> vol.nx >> vol.ny >> vol.nz >> vol.spacing.x >> vol.spacing.y >> vol.spacing.z >>
      vol.origin.x >> vol.origin.y >> vol.origin.z;
  if (!hs || magic != "GVOL1")
    throw std::runtime_error("load_density_volume: malformed GVOL header in " + path);
  if (vol.nx < 2 || vol.ny < 2 || vol.nz < 2 || vol.spacing.x <= 0 || vol.spacing.y <= 0 ||
      vol.spacing.z <= 0)
    throw std::runtime_error("load_density_volume: invalid dims/spacing in " + path);

  const std::size_t count = static_cast<std::size_t>(vol.nx) * vol.ny * vol.nz;
  std::vector<unsigned char> bytes(count * 4);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size())
    throw std::runtime_error("load_density_volume: truncated data in " + path);

  vol.rho.resize(count);
  for (std::size_t q = 0; q < count; ++q) vol.rho[q] = float_from_le(&bytes[q * 4]);
  vol.validate();
  return vol;
}

void save_density_volume(const DensityVolume& volume, const std::string& path) {
  volume.validate();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_density_volume: cannot open " + path);
  char header[256];
  std::snprintf(header, sizeof(header), "GVOL1 %d %d %d %.17g %.17g %.17g %.17g %.17g %.17g\n",
                volume.nx, volume.ny, volume.nz, volume.spacing.x, volume.spacing.y,
                volume.spacing.z, volume.origin.x, volume.origin.y, volume.origin.z);
  out << header;
  std::vector<unsigned char> bytes(volume.rho.size() * 4);
  for (std::size_t q = 0; q < volume.rho.size(); ++q) float_to_le(volume.rho[q], &bytes[q * 4]);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("save_density_volume: write failed for " + path);
}

}  // namespace raybos
