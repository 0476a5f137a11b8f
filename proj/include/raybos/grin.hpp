// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <optional>

#include "raybos/core.hpp"
#include "raybos/raygen.hpp"
#include "raybos/scene.hpp"

namespace raybos {

// State of one ray inside a graded-index medium. t = n * dx/dxi is the
// index-scaled tangent; |t| equals the local refractive index while the
// integration is accurate.
struct RayState {
  Vec3 r;  // position, m
  Vec3 t;  // scaled direction, dimensionless
};

struct StepParams {
  double delta_xi = 0.0;  // step size, m
  int max_steps = 100000;
};

// Right-hand side of the ray equation in Runge-Kutta-Nystrom form:
// D(r) = n * grad(n) = 0.5 * grad(n^2). Zero outside the field bounds.
Vec3 d_function(const RefractiveField& field, const Vec3& r);

// One fixed-size Runge-Kutta step of r'' = D(r):
//   a = D(r_i) * h
//   b = D(r_i + (t_i/2 + a/8) * h) * h
//   c = D(r_i + (t_i + b/2) * h) * h
//   r_{i+1} = r_i + (t_i + (a + 2b)/6) * h
//   t_{i+1} = t_i + (a + 4b + c)/6
RayState rk4_step(const RayState& state, const RefractiveField& field, double delta_xi);

struct SlabInterval {
  double t_near = 0.0;  // clamped to 0 when the origin is inside
  double t_far = 0.0;
};

// Slab-method ray/box intersection. Requires |dir| = 1. A miss is a value,
// not an error.
std::optional<SlabInterval> aabb_intersect(const Vec3& origin, const Vec3& dir, const Aabb& box);

enum class TraceStatus {
  kMissedVolume,  // no box intersection; ray passes unchanged
  kTraced,        // entered and exited normally
  kLost,          // max_steps exhausted inside the volume
  kInvalid,       // non-finite state encountered
};

struct TraceResult {
  Ray ray;
  TraceStatus status = TraceStatus::kMissedVolume;
  int steps = 0;

  bool ok() const { return status == TraceStatus::kMissedVolume || status == TraceStatus::kTraced; }
};

// Per-step hook for trajectory dumps: called with (xi, state) after entry
// and after every accepted step.
using StepObserver = std::function<void(double xi, const RayState& state)>;

// Advances the ray in a straight line to the field's bounding box, then
// integrates the ray equation until the path leaves the box. The final
// partial step is cut back to the crossing point by linear interpolation,
// and the exit direction is renormalized from t.
TraceResult trace_through_volume(const Ray& ray, const RefractiveField& field,
                                 const StepParams& params, const StepObserver* observer = nullptr);

}  // namespace raybos
