// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "raybos/core.hpp"

namespace raybos {

struct Ray {
  Vec3 origin;          // m
  Vec3 dir;             // unit
  double radiance = 1.0;
  double wavelength = 500e-9;  // m
};

enum class ApertureSampling { kStratified, kUniformRandom };

struct BundleSpec {
  int rays_per_source = 1;
  ApertureSampling sampling = ApertureSampling::kStratified;
  std::uint64_t seed = 0;
};

// Disk on the front plane of the first optical element that ray bundles
// are aimed at.
struct ApertureDisk {
  Vec3 center;
  Vec3 axis;  // unit normal of the disk plane, pointing downstream
  double radius = 0.0;
};

// Shirley-Chiu concentric mapping of the unit square onto the unit disk.
// Area preserving, so uniform square samples stay uniform on the disk.
Vec2 concentric_disk_map(double u, double v);

// Sample points on the aperture disk for one source point. Stratified
// mode jitters a near-square lattice mapped through the concentric disk
// map; uniform mode draws i.i.d. disk points. Both are deterministic in
// (spec.seed, source_index, ray index).
std::vector<Vec3> sample_aperture_points(const ApertureDisk& disk, const BundleSpec& spec,
                                         std::uint64_t source_index);

// Optional angular radiance hook: maps a unit ray direction to a relative
// weight. Mie-style lobes can be plugged in here; weights are normalized
// over the bundle so total bundle energy stays 1.
using RadianceModel = std::function<double(const Vec3& dir)>;

// One ray per aperture point, directed from the source to the point.
// Default radiance model is uniform: every ray carries 1/N.
// Throws std::invalid_argument if the source coincides with a point.
std::vector<Ray> emit_rays(const Vec3& source, std::span<const Vec3> aperture_points,
                           double wavelength, const RadianceModel& model = {});

}  // namespace raybos
