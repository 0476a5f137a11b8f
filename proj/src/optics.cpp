// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#include "raybos/optics.hpp"

#include <cmath>
#include <stdexcept>

namespace raybos {

namespace {

constexpr double kForwardEps = 1e-12;

double radial_distance(const Vec3& p, const Vec3& axis_point, const Vec3& axis) {
  const Vec3 rel = p - axis_point;
  return norm(rel - axis * dot(rel, axis));
}

std::optional<SurfaceHit> intersect_plane_cap(const Ray& ray, const Vec3& point, const Vec3& axis,
                                              double clear_radius) {
  const double denom = dot(ray.dir, axis);
  if (denom == 0.0) return std::nullopt;
  const double t = dot(point - ray.origin, axis) / denom;
  if (t <= kForwardEps) return std::nullopt;
  const Vec3 p = ray.origin + ray.dir * t;
  if (radial_distance(p, point, axis) > clear_radius) return std::nullopt;
  const Vec3 normal = denom < 0.0 ? axis : -axis;
  return SurfaceHit{p, normal, t};
}

}  // namespace

std::optional<SurfaceHit> intersect_sphere(const Ray& ray, const SphericalSurface& surface) {
  if (surface.planar())
    return intersect_plane_cap(ray, surface.vertex, surface.axis, surface.aperture_radius);

  const Vec3 center = surface.curvature_center();
  const Vec3 oc = ray.origin - center;
  const double b = dot(oc, ray.dir);
  const double c = norm2(oc) - surface.curvature_radius * surface.curvature_radius;
  const double disc = b * b - c;
  if (disc < 0.0) return std::nullopt;
  const double sq = std::sqrt(disc);

  for (const double t : {-b - sq, -b + sq}) {
    if (t <= kForwardEps) continue;
    const Vec3 p = ray.origin + ray.dir * t;
    // Keep only the cap containing the vertex, not the far hemisphere.
    if (dot(p - center, surface.vertex - center) <= 0.0) continue;
    if (radial_distance(p, surface.vertex, surface.axis) > surface.aperture_radius) continue;
    Vec3 normal = (p - center) / std::abs(surface.curvature_radius);
    if (dot(ray.dir, normal) > 0.0) normal = -normal;
    return SurfaceHit{p, normal, t};
  }
  return std::nullopt;
}

std::optional<Vec3> refract(const Vec3& dir, const Vec3& normal, double n_i, double n_f) {
  const double eta = n_i / n_f;
  const double cos_i = -dot(dir, normal);
  const double k = 1.0 - eta * eta * (1.0 - cos_i * cos_i);
  if (k < 0.0) return std::nullopt;  // total internal reflection
  return normalized(dir * eta + normal * (eta * cos_i - std::sqrt(k)));
}

Vec3 reflect(const Vec3& dir, const Vec3& normal) { return dir - normal * (2.0 * dot(dir, normal)); }

LensElement make_singlet(const Vec3& front_vertex, const Vec3& axis, double r1, double r2,
                         double thickness, double glass_index, double diameter,
                         double ambient_index) {
  if (thickness <= 0.0) throw std::invalid_argument("make_singlet: thickness must be positive");
  if (diameter <= 0.0) throw std::invalid_argument("make_singlet: diameter must be positive");
  if (glass_index <= 0.0) throw std::invalid_argument("make_singlet: glass index must be positive");
  LensElement lens;
  lens.thickness = thickness;
  lens.glass_index = glass_index;
  lens.diameter = diameter;
  lens.front = {front_vertex, axis, r1, 0.5 * diameter, ambient_index, glass_index};
  lens.back = {front_vertex + axis * thickness, axis, r2, 0.5 * diameter, glass_index,
               ambient_index};
  return lens;
}

OpticsResult propagate_through_lens(const Ray& ray, const LensElement& lens) {
  const auto front_hit = intersect_sphere(ray, lens.front);
  if (!front_hit) return {ray, BlockReason::kMissedElement};
  const auto into_glass = refract(ray.dir, front_hit->normal, lens.front.n_before,
                                  lens.front.n_after);
  if (!into_glass) return {ray, BlockReason::kTotalInternalReflection};

  Ray inside = ray;
  inside.origin = front_hit->point;
  inside.dir = *into_glass;

  const auto back_hit = intersect_sphere(inside, lens.back);
  if (!back_hit) return {inside, BlockReason::kMissedElement};
  const auto out_of_glass = refract(inside.dir, back_hit->normal, lens.back.n_before,
                                    lens.back.n_after);
  if (!out_of_glass) return {inside, BlockReason::kTotalInternalReflection};

  Ray out = inside;
  out.origin = back_hit->point;
  out.dir = *out_of_glass;
  return {out};
}

OpticsResult apply_aperture(const Ray& ray, const Aperture& aperture) {
  const double denom = dot(ray.dir, aperture.normal);
  if (denom == 0.0) return {ray, BlockReason::kMissedElement};
  const double t = dot(aperture.center - ray.origin, aperture.normal) / denom;
  if (t <= kForwardEps) return {ray, BlockReason::kMissedElement};
  const Vec3 p = ray.origin + ray.dir * t;
  if (norm(p - aperture.center) > aperture.radius) return {ray, BlockReason::kApertureStop};
  return {ray};  // transmitted rays pass unchanged
}

OpticsResult propagate_thin_lens(const Ray& ray, const ThinLensIdeal& lens) {
  const auto hit = intersect_plane_cap(ray, lens.center, lens.axis, 0.5 * lens.diameter);
  if (!hit) return {ray, BlockReason::kMissedElement};
  const double dz = dot(ray.dir, lens.axis);
  if (dz <= 0.0) return {ray, BlockReason::kMissedElement};

  // All rays sharing a direction meet at that direction's point on the
  // focal plane; this reproduces the thin-lens conjugate equation exactly
  // for every pupil height.
  const Vec3 focal_point = lens.center + ray.dir * (lens.focal_length / dz);
  Ray out = ray;
  out.origin = hit->point;
  out.dir = normalized((focal_point - hit->point) * (lens.focal_length > 0.0 ? 1.0 : -1.0));
  return {out};
}

OpticsResult reflect_on_mirror(const Ray& ray, const Mirror& mirror) {
  const auto hit = intersect_sphere(ray, mirror.surface);
  if (!hit) return {ray, BlockReason::kMissedElement};
  Ray out = ray;
  out.origin = hit->point;
  out.dir = reflect(ray.dir, hit->normal);
  return {out};
}

OpticsResult propagate_chain(const Ray& ray, std::span<const OpticalElement> elements) {
  OpticsResult result{ray};
  for (const OpticalElement& element : elements) {
    result = std::visit(
        [&](const auto& e) -> OpticsResult {
          using T = std::decay_t<decltype(e)>;
          if constexpr (std::is_same_v<T, Aperture>) return apply_aperture(result.ray, e);
          if constexpr (std::is_same_v<T, LensElement>) return propagate_through_lens(result.ray, e);
          if constexpr (std::is_same_v<T, ThinLensIdeal>) return propagate_thin_lens(result.ray, e);
          if constexpr (std::is_same_v<T, Mirror>) return reflect_on_mirror(result.ray, e);
        },
        element);
    if (!result.ok()) return result;
  }
  return result;
}

}  // namespace raybos
