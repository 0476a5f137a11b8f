// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <limits>
#include <optional>
#include <span>
#include <variant>

#include "raybos/core.hpp"
#include "raybos/raygen.hpp"

namespace raybos {

enum class BlockReason {
  kNone,
  kApertureStop,             // outside an aperture opening
  kMissedElement,            // no forward intersection within the clear radius
  kTotalInternalReflection,  // Snell's law has no real transmitted angle
};

// Spherical refracting/reflecting cap. The curvature radius is signed:
// positive means the center of curvature lies downstream of the vertex
// (along +axis). An infinite radius marks a planar surface.
struct SphericalSurface {
  Vec3 vertex;
  Vec3 axis;                 // unit, downstream
  double curvature_radius = std::numeric_limits<double>::infinity();
  double aperture_radius = 0.0;  // clear semi-diameter
  double n_before = 1.0;
  double n_after = 1.0;

  bool planar() const { return !std::isfinite(curvature_radius); }
  Vec3 curvature_center() const { return vertex + axis * curvature_radius; }
};

struct SurfaceHit {
  Vec3 point;
  Vec3 normal;  // unit; oriented against the incoming ray
  double t = 0.0;
};

// Nearest forward intersection with the cap, within the clear radius.
std::optional<SurfaceHit> intersect_sphere(const Ray& ray, const SphericalSurface& surface);

// Vector Snell refraction. `normal` must oppose the incident direction
// (dot(dir, normal) <= 0). Returns nullopt on total internal reflection.
std::optional<Vec3> refract(const Vec3& dir, const Vec3& normal, double n_i, double n_f);

// Law of reflection: d - 2 (d.n) n.
Vec3 reflect(const Vec3& dir, const Vec3& normal);

// Thick singlet: two spherical surfaces on a common axis.
struct LensElement {
  SphericalSurface front;
  SphericalSurface back;
  double thickness = 0.0;    // center thickness, m
  double glass_index = 1.5;
  double diameter = 0.0;
};

// Convenience builder; r1/r2 follow the signed convention above and an
// infinite radius gives a flat face.
LensElement make_singlet(const Vec3& front_vertex, const Vec3& axis, double r1, double r2,
                         double thickness, double glass_index, double diameter,
                         double ambient_index = 1.0);

struct Aperture {
  Vec3 center;
  Vec3 normal;
  double radius = 0.0;  // opening radius ("pitch")
};

struct Mirror {
  SphericalSurface surface;
};

// Ideal stigmatic lens used as a validation reference: rays sharing an
// incoming direction meet at that direction's point on the focal plane.
struct ThinLensIdeal {
  Vec3 center;
  Vec3 axis;
  double focal_length = 0.0;
  double diameter = 0.0;
};

struct OpticsResult {
  Ray ray;
  BlockReason reason = BlockReason::kNone;

  bool ok() const { return reason == BlockReason::kNone; }
};

OpticsResult propagate_through_lens(const Ray& ray, const LensElement& lens);
OpticsResult apply_aperture(const Ray& ray, const Aperture& aperture);
OpticsResult propagate_thin_lens(const Ray& ray, const ThinLensIdeal& lens);
OpticsResult reflect_on_mirror(const Ray& ray, const Mirror& mirror);

using OpticalElement = std::variant<Aperture, LensElement, ThinLensIdeal, Mirror>;

// Folds the per-element propagation in order; the first block terminates.
OpticsResult propagate_chain(const Ray& ray, std::span<const OpticalElement> elements);

}  // namespace raybos
