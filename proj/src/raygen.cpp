// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#include "raybos/raygen.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace raybos {

Vec2 concentric_disk_map(double u, double v) {
  const double sx = 2.0 * u - 1.0;
  const double sy = 2.0 * v - 1.0;
  if (sx == 0.0 && sy == 0.0) return {0.0, 0.0};
  double r, phi;
  if (std::abs(sx) > std::abs(sy)) {
    r = sx;
    phi = (std::numbers::pi / 4.0) * (sy / sx);
  } else {
    r = sy;
    phi = std::numbers::pi / 2.0 - (std::numbers::pi / 4.0) * (sx / sy);
  }
  return {r * std::cos(phi), r * std::sin(phi)};
}

std::vector<Vec3> sample_aperture_points(const ApertureDisk& disk, const BundleSpec& spec,
                                         std::uint64_t source_index) {
  if (spec.rays_per_source < 1)
    throw std::invalid_argument("sample_aperture_points: rays_per_source must be >= 1");
  if (disk.radius <= 0.0) throw std::invalid_argument("sample_aperture_points: radius must be > 0");

  Vec3 e1, e2;
  plane_basis(disk.axis, e1, e2);

  const int n = spec.rays_per_source;
  std::vector<Vec3> points;
  points.reserve(n);

  constexpr std::uint64_t kApertureSalt = 0xa93c0de5u;
  if (spec.sampling == ApertureSampling::kStratified) {
    const int cells = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n))));
    for (int i = 0; i < n; ++i) {
      double u, v;
      if (n == 1) {
        u = v = 0.5;  // degenerate bundle aims at the disk center
      } else {
        CounterRng rng(spec.seed ^ kApertureSalt, source_index, static_cast<std::uint64_t>(i));
        const int cx = i % cells;
        const int cy = i / cells;
        u = (cx + rng.uniform()) / cells;
        v = (cy + rng.uniform()) / cells;
      }
      const Vec2 d = concentric_disk_map(u, v);
      points.push_back(disk.center + (e1 * d.x + e2 * d.y) * disk.radius);
    }
  } else {
    for (int i = 0; i < n; ++i) {
      CounterRng rng(spec.seed ^ kApertureSalt, source_index, static_cast<std::uint64_t>(i));
      const Vec2 d = concentric_disk_map(rng.uniform(), rng.uniform());
      points.push_back(disk.center + (e1 * d.x + e2 * d.y) * disk.radius);
    }
  }
  return points;
}

std::vector<Ray> emit_rays(const Vec3& source, std::span<const Vec3> aperture_points,
                           double wavelength, const RadianceModel& model) {
  if (wavelength <= 0.0) throw std::invalid_argument("emit_rays: wavelength must be positive");
  std::vector<Ray> bundle;
  bundle.reserve(aperture_points.size());
  double total_weight = 0.0;
  for (const Vec3& p : aperture_points) {
    const Vec3 to_point = p - source;
    const double len = norm(to_point);
    if (len <= 0.0) throw std::invalid_argument("emit_rays: source coincides with aperture point");
    Ray ray;
    ray.origin = source;
    ray.dir = to_point / len;
    ray.wavelength = wavelength;
    ray.radiance = model ? model(ray.dir) : 1.0;
    total_weight += ray.radiance;
    bundle.push_back(ray);
  }
  if (total_weight <= 0.0) throw std::invalid_argument("emit_rays: radiance model weights sum to 0");
  for (Ray& ray : bundle) ray.radiance /= total_weight;
  return bundle;
}

}  // namespace raybos
