// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <stdexcept>

#include <cmath>

#include "raybos/grin.hpp"
#include "raybos/scene.hpp"

using namespace raybos;

namespace {

AnalyticField linear_x_field(double alpha, const Aabb& box) {
  return AnalyticField([alpha](const Vec3& p) { return 1.0 + alpha * p.x; },
                       [alpha](const Vec3&) { return Vec3{alpha, 0.0, 0.0}; }, box);
}

AnalyticField linear_y_field(double alpha, const Aabb& box) {
  return AnalyticField([alpha](const Vec3& p) { return 1.0 + alpha * p.y; },
                       [alpha](const Vec3&) { return Vec3{0.0, alpha, 0.0}; }, box);
}

AnalyticField gaussian_field(double amplitude, double w, const Aabb& box) {
  const double inv_w2 = 1.0 / (w * w);
  return AnalyticField(
      [amplitude, inv_w2](const Vec3& p) { return 1.0 + amplitude * std::exp(-norm2(p) * inv_w2); },
      [amplitude, inv_w2](const Vec3& p) {
        return p * (-2.0 * inv_w2 * amplitude * std::exp(-norm2(p) * inv_w2));
      },
      box);
}

// Builds the gridded stacked-slice volume with a uniform x density
// gradient, ambient density in the center.
GriddedField uniform_gradient_grid(double grad_x, double width, double depth, double z0) {
  const int n = 17;
  DensitySlice slice;
  slice.nx = slice.ny = n;
  slice.dx = slice.dy = width / (n - 1);
  slice.origin = {-0.5 * width, -0.5 * width};
  slice.rho.resize(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i)
      slice.rho[slice.index(i, j)] =
          static_cast<float>(1.225 + grad_x * (slice.origin.x + i * slice.dx));
  const int nz = 5;
  return GriddedField(stack_2d_slice(slice, nz, depth / (nz - 1), z0), 2.26e-4);
}

}  // namespace

TEST_CASE("d_function is zero in uniform fields and outside the box") {
  const AnalyticField uniform(
      [](const Vec3&) { return 1.0003; }, [](const Vec3&) { return Vec3{}; },
      Aabb{{-1, -1, -1}, {1, 1, 1}});
  CHECK(norm(d_function(uniform, {0.1, 0.2, 0.3})) == 0.0);
  CHECK(norm(d_function(uniform, {5, 0, 0})) == 0.0);  // outside
}

TEST_CASE("d_function matches n grad n for a linear index profile") {
  const double alpha = 0.02;
  const auto field = linear_x_field(alpha, {{-1, -1, -1}, {1, 1, 1}});
  for (const double x : {-0.5, 0.0, 0.25, 0.8}) {
    const Vec3 d = d_function(field, {x, 0.1, -0.2});
    CHECK(d.x == doctest::Approx((1.0 + alpha * x) * alpha).epsilon(1e-14));
    CHECK(d.y == 0.0);
    CHECK(d.z == 0.0);
  }
}

TEST_CASE("d_function equals half the finite-difference gradient of n^2") {
  const auto field = gaussian_field(0.01, 0.01, {{-0.05, -0.05, -0.05}, {0.05, 0.05, 0.05}});
  const Vec3 p{0.004, -0.002, 0.0035};
  const double h = 1e-6;
  auto n2 = [&field](const Vec3& q) {
    const double n = field.sample(q)->n;
    return n * n;
  };
  const Vec3 fd{(n2({p.x + h, p.y, p.z}) - n2({p.x - h, p.y, p.z})) / (2 * h),
                (n2({p.x, p.y + h, p.z}) - n2({p.x, p.y - h, p.z})) / (2 * h),
                (n2({p.x, p.y, p.z + h}) - n2({p.x, p.y, p.z - h})) / (2 * h)};
  const Vec3 d = d_function(field, p);
  CHECK(norm(d - fd * 0.5) < 1e-8 * norm(d));
}

TEST_CASE("rk4 step through a gradient-free region is a straight line") {
  const AnalyticField uniform(
      [](const Vec3&) { return 1.0003; }, [](const Vec3&) { return Vec3{}; },
      Aabb{{-1, -1, -1}, {1, 1, 1}});
  const RayState s0{{0.01, 0.02, -0.5}, Vec3{0, 0, 1} * 1.0003};
  const RayState s1 = rk4_step(s0, uniform, 1e-3);
  CHECK(norm(s1.r - (s0.r + s0.t * 1e-3)) == 0.0);
  CHECK(norm(s1.t - s0.t) == 0.0);
}

TEST_CASE("linear transverse gradient bends a ray by alpha L / n0") {
  // n = n0 + alpha y, ray along x over length L: exit slope ~ alpha L / n0.
  const double alpha = 1e-3;
  const double length = 0.01;
  const auto field = linear_y_field(alpha, {{-1, -1, -1}, {1, 1, 1}});

  auto integrate = [&](int steps) {
    RayState s{{0, 0, 0}, Vec3{1, 0, 0} * field.sample({0, 0, 0})->n};
    const double h = length / steps;
    for (int i = 0; i < steps; ++i) s = rk4_step(s, field, h);
    return s;
  };

  const RayState coarse = integrate(20);
  const double slope = coarse.t.y / coarse.t.x;
  CHECK(slope == doctest::Approx(alpha * length).epsilon(1e-3));  // 1.0e-5

  // Fine-step reference: the coarse integration agrees with steps/1000 of
  // the size to far better than the physics tolerance.
  const RayState fine = integrate(20000);
  CHECK(std::abs(coarse.t.y - fine.t.y) < 1e-3 * std::abs(fine.t.y));
}

TEST_CASE("halving the step cuts the error by about 2^4") {
  const auto field = gaussian_field(0.01, 0.01, {{-1, -1, -1}, {1, 1, 1}});
  const Vec3 start{0.004, 0.0, -0.04};
  auto integrate = [&](int steps) {
    RayState s{start, Vec3{0, 0, 1} * field.sample(start)->n};
    const double h = 0.08 / steps;
    for (int i = 0; i < steps; ++i) s = rk4_step(s, field, h);
    return s.r;
  };
  const Vec3 ref = integrate(16384);
  const double e1 = norm(integrate(128) - ref);
  const double e2 = norm(integrate(256) - ref);
  const double ratio = e1 / e2;
  CHECK(ratio > 8.0);
  CHECK(ratio < 40.0);
}

TEST_CASE("aabb slab intersection") {
  const Aabb box{{-1, -1, -1}, {1, 1, 1}};

  // Through the center along +x.
  const auto hit = aabb_intersect({-3, 0, 0}, {1, 0, 0}, box);
  REQUIRE(hit.has_value());
  CHECK(hit->t_near == doctest::Approx(2.0));
  CHECK(hit->t_far == doctest::Approx(4.0));

  // Parallel to a face, outside the slab.
  CHECK(!aabb_intersect({-3, 2, 0}, {1, 0, 0}, box).has_value());

  // Origin inside: near distance clamps to zero.
  const auto inside = aabb_intersect({0.5, 0, 0}, {1, 0, 0}, box);
  REQUIRE(inside.has_value());
  CHECK(inside->t_near == 0.0);
  CHECK(inside->t_far == doctest::Approx(0.5));

  // Box behind the ray.
  CHECK(!aabb_intersect({3, 0, 0}, {1, 0, 0}, box).has_value());
}

TEST_CASE("zero-gradient volume leaves rays collinear with entry") {
  const GriddedField field = uniform_gradient_grid(0.0, 0.048, 0.01, 0.245);
  Ray ray;
  ray.origin = {1e-3, -2e-3, 0.0};
  ray.dir = normalized(Vec3{0.002, -0.001, 0.98});
  const auto result = trace_through_volume(ray, field, {2.5e-4, 10000});
  REQUIRE(result.status == TraceStatus::kTraced);
  const double angle = std::acos(std::min(1.0, dot(result.ray.dir, ray.dir)));
  CHECK(angle < 1e-12);

  // Displacement on a downstream plane matches straight propagation.
  const double z_plane = 0.98;
  const double t_straight = (z_plane - ray.origin.z) / ray.dir.z;
  const Vec3 straight = ray.origin + ray.dir * t_straight;
  const double t_traced = (z_plane - result.ray.origin.z) / result.ray.dir.z;
  const Vec3 traced = result.ray.origin + result.ray.dir * t_traced;
  CHECK(norm(straight - traced) < 1e-12);
}

TEST_CASE("uniform density gradient deflects by K grad L / n0") {
  // Hand evaluation of the small-angle deflection integral:
  //   eps = K * drho/dx * L_z / n0 = 2.26e-4 * 10 * 0.01 / 1.000277.
  const double expected = 2.26e-4 * 10.0 * 0.01 / gladstone_dale(1.225, 2.26e-4);
  CHECK(expected == doctest::Approx(2.26e-5).epsilon(5e-4));

  const GriddedField field = uniform_gradient_grid(10.0, 0.048, 0.01, 0.245);
  Ray ray;
  ray.origin = {0.0, 0.0, 0.0};
  ray.dir = {0.0, 0.0, 1.0};

  const auto result = trace_through_volume(ray, field, {2.5e-4, 10000});
  REQUIRE(result.status == TraceStatus::kTraced);
  const double deflection = std::atan2(result.ray.dir.x, result.ray.dir.z);
  CHECK(deflection == doctest::Approx(expected).epsilon(2e-3));

  // Fine-step cross-check.
  const auto fine = trace_through_volume(ray, field, {2.5e-6, 1000000});
  REQUIRE(fine.status == TraceStatus::kTraced);
  CHECK(std::atan2(fine.ray.dir.x, fine.ray.dir.z) == doctest::Approx(deflection).epsilon(1e-4));
}

TEST_CASE("gaussian blob deflections are antisymmetric across the center") {
  const auto field = gaussian_field(1e-4, 0.004, {{-0.016, -0.016, -0.005}, {0.016, 0.016, 0.005}});
  const StepParams params{1e-4, 100000};
  for (const double x : {0.002, 0.005, 0.009}) {
    Ray plus;
    plus.origin = {x, 0.0, -0.02};
    plus.dir = {0, 0, 1};
    Ray minus;
    minus.origin = {-x, 0.0, -0.02};
    minus.dir = {0, 0, 1};
    const auto rp = trace_through_volume(plus, field, params);
    const auto rm = trace_through_volume(minus, field, params);
    REQUIRE(rp.status == TraceStatus::kTraced);
    REQUIRE(rm.status == TraceStatus::kTraced);
    CHECK(rp.ray.dir.x == doctest::Approx(-rm.ray.dir.x).epsilon(1e-10));
  }
}

TEST_CASE("tracing the exit ray backwards recovers the entry point") {
  const auto field = gaussian_field(0.01, 0.01, {{-0.03, -0.03, -0.03}, {0.03, 0.03, 0.03}});
  Ray ray;
  ray.origin = {0.004, -0.002, -0.05};
  ray.dir = {0, 0, 1};
  const StepParams params{1e-4, 100000};
  const auto fwd = trace_through_volume(ray, field, params);
  REQUIRE(fwd.status == TraceStatus::kTraced);

  Ray back;
  back.origin = fwd.ray.origin;
  back.dir = -fwd.ray.dir;
  const auto rev = trace_through_volume(back, field, params);
  REQUIRE(rev.status == TraceStatus::kTraced);

  // The reverse trace must exit through the entry face at the entry point.
  const Vec3 entry{ray.origin.x, ray.origin.y, -0.03};
  CHECK(norm(rev.ray.origin - entry) < 1e-8);
}

TEST_CASE("eikonal norm |T| = n is conserved through the trace") {
  const auto field = gaussian_field(0.01, 0.01, {{-0.03, -0.03, -0.03}, {0.03, 0.03, 0.03}});
  Ray ray;
  ray.origin = {0.005, 0.0, -0.05};
  ray.dir = {0, 0, 1};
  double worst = 0.0;
  StepObserver observer = [&](double, const RayState& s) {
    const auto sample = field.sample(s.r);
    if (sample) worst = std::max(worst, std::abs(norm(s.t) / sample->n - 1.0));
  };
  const auto result = trace_through_volume(ray, field, {5e-5, 100000}, &observer);
  REQUIRE(result.status == TraceStatus::kTraced);
  CHECK(worst < 1e-6);
}

TEST_CASE("rays that miss the volume pass unchanged") {
  const GriddedField field = uniform_gradient_grid(10.0, 0.048, 0.01, 0.245);
  Ray ray;
  ray.origin = {0.1, 0.0, 0.0};
  ray.dir = {0, 0, 1};  // passes outside the 48 mm slab
  const auto result = trace_through_volume(ray, field, {2.5e-4, 10000});
  CHECK(result.status == TraceStatus::kMissedVolume);
  CHECK(norm(result.ray.origin - ray.origin) == 0.0);
  CHECK(norm(result.ray.dir - ray.dir) == 0.0);
}

TEST_CASE("step starvation flags the ray as lost") {
  const GriddedField field = uniform_gradient_grid(10.0, 0.048, 0.01, 0.245);
  Ray ray;
  ray.origin = {0, 0, 0};
  ray.dir = {0, 0, 1};
  const auto result = trace_through_volume(ray, field, {2.5e-4, 3});
  CHECK(result.status == TraceStatus::kLost);
}

TEST_CASE("gridded-field convergence is monotone in step size") {
  // Trilinear interpolation kinks at cell faces, so only monotone error
  // decrease is expected here, not clean fourth order.
  DensitySlice slice;
  const int n = 33;
  slice.nx = slice.ny = n;
  slice.dx = slice.dy = 0.032 / (n - 1);
  slice.origin = {-0.016, -0.016};
  slice.rho.resize(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) {
      const double x = slice.origin.x + i * slice.dx;
      const double y = slice.origin.y + j * slice.dy;
      slice.rho[slice.index(i, j)] =
          static_cast<float>(1.225 + 0.5 * std::exp(-(x * x + y * y) / (2 * 4e-3 * 4e-3)));
    }
  const GriddedField field(stack_2d_slice(slice, 5, 0.0025, 0.245), 2.26e-4);
  Ray ray;
  ray.origin = {3.1e-3, 0.4e-3, 0.0};
  ray.dir = normalized(Vec3{0.001, 0.0005, 1.0});

  const auto ref = trace_through_volume(ray, field, {1e-5, 1000000});
  REQUIRE(ref.status == TraceStatus::kTraced);
  double prev_err = -1.0;
  for (const double h : {8e-4, 4e-4, 2e-4}) {
    const auto r = trace_through_volume(ray, field, {h, 1000000});
    REQUIRE(r.status == TraceStatus::kTraced);
    const double err = norm(r.ray.dir - ref.ray.dir);
    if (prev_err >= 0.0) CHECK(err <= prev_err);
    prev_err = err;
  }
}
