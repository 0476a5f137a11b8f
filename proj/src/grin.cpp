// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#include "raybos/grin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace raybos {

Vec3 d_function(const RefractiveField& field, const Vec3& r) {
  const auto s = field.sample(r);
  if (!s) return {};
  return s->grad * s->n;
}

namespace {

// Stage evaluator used inside the volume trace. Points that poke past the
// bounding box during the final partial step are clamped to the nearest
// face, extending the field as constant instead of dropping the stage.
struct ClampedD {
  const RefractiveField& field;
  Aabb box;

  Vec3 operator()(const Vec3& r) const {
    const Vec3 q{std::clamp(r.x, box.lo.x, box.hi.x), std::clamp(r.y, box.lo.y, box.hi.y),
                 std::clamp(r.z, box.lo.z, box.hi.z)};
    const auto s = field.sample(q);
    return s ? s->grad * s->n : Vec3{};
  }
};

template <typename DFn>
RayState rk4_step_impl(const RayState& state, const DFn& d, double h) {
  const Vec3 a = d(state.r) * h;
  const Vec3 b = d(state.r + (state.t * 0.5 + a * 0.125) * h) * h;
  const Vec3 c = d(state.r + (state.t + b * 0.5) * h) * h;
  RayState next;
  next.r = state.r + (state.t + (a + b * 2.0) * (1.0 / 6.0)) * h;
  next.t = state.t + (a + b * 4.0 + c) * (1.0 / 6.0);
  return next;
}

}  // namespace

RayState rk4_step(const RayState& state, const RefractiveField& field, double delta_xi) {
  return rk4_step_impl(state, [&field](const Vec3& r) { return d_function(field, r); }, delta_xi);
}

std::optional<SlabInterval> aabb_intersect(const Vec3& origin, const Vec3& dir, const Aabb& box) {
  double t_near = -std::numeric_limits<double>::infinity();
  double t_far = std::numeric_limits<double>::infinity();
  const double o[3] = {origin.x, origin.y, origin.z};
  const double d[3] = {dir.x, dir.y, dir.z};
  const double lo[3] = {box.lo.x, box.lo.y, box.lo.z};
  const double hi[3] = {box.hi.x, box.hi.y, box.hi.z};
  for (int axis = 0; axis < 3; ++axis) {
    if (d[axis] == 0.0) {
      if (o[axis] < lo[axis] || o[axis] > hi[axis]) return std::nullopt;
      continue;
    }
    double t0 = (lo[axis] - o[axis]) / d[axis];
    double t1 = (hi[axis] - o[axis]) / d[axis];
    if (t0 > t1) std::swap(t0, t1);
    t_near = std::max(t_near, t0);
    t_far = std::min(t_far, t1);
  }
  if (t_far < t_near || t_far < 0.0) return std::nullopt;
  return SlabInterval{std::max(t_near, 0.0), t_far};
}

TraceResult trace_through_volume(const Ray& ray, const RefractiveField& field,
                                 const StepParams& params, const StepObserver* observer) {
  const Aabb box = field.bounds();
  const auto interval = aabb_intersect(ray.origin, ray.dir, box);
  if (!interval) return {ray, TraceStatus::kMissedVolume, 0};

  const double h = params.delta_xi;
  if (!(h > 0.0)) return {ray, TraceStatus::kInvalid, 0};

  // Enter a hair inside the box so the first sample cannot round outside.
  // Moving along the ray line does not perturb the trajectory.
  constexpr double kEntryNudge = 1e-9;
  const ClampedD d{field, box};

  RayState state;
  state.r = ray.origin + ray.dir * (interval->t_near + kEntryNudge);
  if (!box.contains(state.r)) return {ray, TraceStatus::kMissedVolume, 0};
  const auto entry = field.sample(state.r);
  state.t = ray.dir * (entry ? entry->n : 1.0);

  double xi = 0.0;
  if (observer) (*observer)(xi, state);

  for (int step = 0; step < params.max_steps; ++step) {
    const RayState next = rk4_step_impl(state, d, h);
    if (!finite(next.r) || !finite(next.t)) return {ray, TraceStatus::kInvalid, step};

    if (box.contains(next.r)) {
      state = next;
      xi += h;
      if (observer) (*observer)(xi, state);
      continue;
    }

    // Crossed the boundary: cut the step back to the first face crossing by
    // linear interpolation of the crossing parameter.
    double s = 1.0;
    const double r0[3] = {state.r.x, state.r.y, state.r.z};
    const double r1[3] = {next.r.x, next.r.y, next.r.z};
    const double lo[3] = {box.lo.x, box.lo.y, box.lo.z};
    const double hi[3] = {box.hi.x, box.hi.y, box.hi.z};
    for (int axis = 0; axis < 3; ++axis) {
      const double delta = r1[axis] - r0[axis];
      if (r1[axis] < lo[axis]) s = std::min(s, (lo[axis] - r0[axis]) / delta);
      if (r1[axis] > hi[axis]) s = std::min(s, (hi[axis] - r0[axis]) / delta);
    }
    s = std::clamp(s, 0.0, 1.0);

    RayState exit_state;
    exit_state.r = state.r + (next.r - state.r) * s;
    exit_state.t = state.t + (next.t - state.t) * s;
    xi += s * h;
    if (observer) (*observer)(xi, exit_state);

    Ray out = ray;
    out.origin = exit_state.r;
    out.dir = normalized(exit_state.t);
    return {out, TraceStatus::kTraced, step + 1};
  }
  return {ray, TraceStatus::kLost, params.max_steps};
}

}  // namespace raybos
