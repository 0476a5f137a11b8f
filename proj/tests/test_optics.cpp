// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <stdexcept>

#include <cmath>
#include <numbers>

#include "raybos/core.hpp"
#include "raybos/optics.hpp"

using namespace raybos;

namespace {

Ray make_ray(const Vec3& origin, const Vec3& dir) {
  Ray r;
  r.origin = origin;
  r.dir = normalized(dir);
  return r;
}

constexpr double kDeg = 180.0 / std::numbers::pi;

}  // namespace

TEST_CASE("axial ray meets the sphere vertex with an opposing normal") {
  SphericalSurface s;
  s.vertex = {0, 0, 0.1};
  s.axis = {0, 0, 1};
  s.curvature_radius = 0.05;
  s.aperture_radius = 0.02;
  const auto hit = intersect_sphere(make_ray({0, 0, 0}, {0, 0, 1}), s);
  REQUIRE(hit.has_value());
  CHECK(norm(hit->point - s.vertex) < 1e-12);
  CHECK(norm(hit->normal - Vec3{0, 0, -1}) < 1e-12);
}

TEST_CASE("rays outside the clear radius miss the surface") {
  SphericalSurface s;
  s.vertex = {0, 0, 0.1};
  s.axis = {0, 0, 1};
  s.curvature_radius = 0.05;
  s.aperture_radius = 0.01;
  CHECK(!intersect_sphere(make_ray({0.02, 0, 0}, {0, 0, 1}), s).has_value());
}

TEST_CASE("planar surface hit follows line-plane algebra") {
  SphericalSurface s;
  s.vertex = {0, 0, 1.0};
  s.axis = {0, 0, 1};
  s.aperture_radius = 5.0;  // planar: infinite curvature radius by default
  REQUIRE(s.planar());
  const auto hit = intersect_sphere(make_ray({0, 0, 0}, {1, 0, 1}), s);
  REQUIRE(hit.has_value());
  CHECK(norm(hit->point - Vec3{1, 0, 1}) < 1e-12);  // 45 degree ray
}

TEST_CASE("snell refraction reproduces the hand-computed angle") {
  const Vec3 normal{0, 0, -1};
  const double th_i = 30.0 / kDeg;
  const auto out = refract({std::sin(th_i), 0, std::cos(th_i)}, normal, 1.0, 1.5);
  REQUIRE(out.has_value());
  const double th_f = std::atan2(out->x, out->z) * kDeg;
  CHECK(th_f == doctest::Approx(19.4712).epsilon(1e-5));
  CHECK(norm(*out) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("normal incidence passes straight through") {
  const auto out = refract({0, 0, 1}, {0, 0, -1}, 1.0, 1.5);
  REQUIRE(out.has_value());
  CHECK(norm(*out - Vec3{0, 0, 1}) < 1e-15);
}

TEST_CASE("steep glass-to-air incidence reflects internally") {
  const double th_i = 60.0 / kDeg;
  CHECK(1.5 * std::sin(th_i) > 1.0);  // sin(theta_f) = 1.299
  const auto out = refract({std::sin(th_i), 0, std::cos(th_i)}, {0, 0, -1}, 1.5, 1.0);
  CHECK(!out.has_value());
}

TEST_CASE("refraction preserves the tangential component and reciprocity") {
  CounterRng rng(0xbeef);
  int checked = 0;
  for (int i = 0; i < 2000; ++i) {
    const double cz = rng.uniform(-1.0, 1.0);
    const double phi = rng.uniform(0.0, 2 * std::numbers::pi);
    const double s = std::sqrt(std::max(0.0, 1 - cz * cz));
    const Vec3 n{s * std::cos(phi), s * std::sin(phi), cz};
    Vec3 e1, e2;
    plane_basis(n, e1, e2);
    const double cos_i = rng.uniform(0.05, 1.0);
    const double sin_i = std::sqrt(1 - cos_i * cos_i);
    const Vec3 d = -n * cos_i + e1 * sin_i;
    const double n_i = rng.uniform(1.0, 1.8);
    const double n_f = rng.uniform(1.0, 1.8);
    const auto t = refract(d, n, n_i, n_f);
    if (!t) continue;
    ++checked;
    CHECK(std::abs(n_i * norm(cross(d, n)) - n_f * norm(cross(*t, n))) < 1e-12);

    // Reversing the transmitted ray recovers the incident direction.
    const auto back = refract(-*t, -n, n_f, n_i);
    REQUIRE(back.has_value());
    CHECK(norm(*back - (-d)) < 1e-10);
  }
  CHECK(checked > 1000);
}

TEST_CASE("reflection is an isometry with the expected geometry") {
  CHECK(norm(reflect({0, 0, 1}, {0, 0, -1}) - Vec3{0, 0, -1}) < 1e-15);  // normal incidence

  // 45 degrees on a plane mirror turns the ray by 90 degrees.
  const Vec3 d = normalized(Vec3{1, 0, 1});
  const Vec3 r = reflect(d, {0, 0, -1});
  CHECK(std::abs(dot(r, d)) < 1e-15);
  CHECK(norm(r) == doctest::Approx(1.0).epsilon(1e-15));

  CounterRng rng(7);
  for (int i = 0; i < 500; ++i) {
    const Vec3 n = normalized(
        Vec3{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    const Vec3 dir = normalized(
        Vec3{rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
    CHECK(std::abs(norm(reflect(dir, n)) - 1.0) < 1e-12);
  }
}

TEST_CASE("axial rays pass through a symmetric biconvex lens undeviated") {
  const auto lens = make_singlet({0, 0, 0}, {0, 0, 1}, 0.1, -0.1, 0.004, 1.5, 0.04);
  const auto out = propagate_through_lens(make_ray({0, 0, -0.1}, {0, 0, 1}), lens);
  REQUIRE(out.ok());
  CHECK(norm(out.ray.dir - Vec3{0, 0, 1}) < 1e-14);
  CHECK(std::abs(out.ray.origin.x) < 1e-14);
}

TEST_CASE("parallel paraxial bundle focuses at the lensmaker focal length") {
  // f = [(n-1)(1/R1 - 1/R2)]^-1 = 100 mm for R = +/-100 mm and glass 1.5.
  const auto lens = make_singlet({0, 0, 0}, {0, 0, 1}, 0.1, -0.1, 0.002, 1.5, 0.04);
  const double f_expected = 1.0 / ((1.5 - 1.0) * (1.0 / 0.1 + 1.0 / 0.1));
  const auto out = propagate_through_lens(make_ray({5e-4, 0, -0.05}, {0, 0, 1}), lens);
  REQUIRE(out.ok());
  const double efl = -5e-4 / (out.ray.dir.x / out.ray.dir.z);
  CHECK(efl == doctest::Approx(f_expected).epsilon(0.02));
}

TEST_CASE("marginal rays focus short of the paraxial focus") {
  const auto lens = make_singlet({0, 0, 0}, {0, 0, 1}, 0.1, -0.1, 0.004, 1.5, 0.04);
  auto crossing = [&lens](double h) {
    const auto out = propagate_through_lens(make_ray({h, 0, -0.05}, {0, 0, 1}), lens);
    REQUIRE(out.ok());
    return out.ray.origin.z - out.ray.origin.x * out.ray.dir.z / out.ray.dir.x;
  };
  CHECK(crossing(0.015) < crossing(5e-4));
}

TEST_CASE("aperture passes inside rays unchanged and blocks the rest") {
  const Aperture stop{{0, 0, 1.0}, {0, 0, 1}, 4.77e-3};
  const auto pass = apply_aperture(make_ray({0, 0, 0}, {0, 0, 1}), stop);
  CHECK(pass.ok());
  CHECK(norm(pass.ray.origin) == 0.0);  // unchanged, not advanced

  // Hit radius barely outside the opening blocks.
  const double r_hit = 4.77e-3 * 1.0001;
  const auto blocked = apply_aperture(make_ray({r_hit, 0, 0}, {0, 0, 1}), stop);
  CHECK(blocked.reason == BlockReason::kApertureStop);

  // No forward intersection for in-plane rays.
  const auto parallel = apply_aperture(make_ray({0, 0, 0}, {1, 0, 0}), stop);
  CHECK(parallel.reason == BlockReason::kMissedElement);
}

TEST_CASE("ideal thin lens images point sources stigmatically") {
  const ThinLensIdeal lens{{0, 0, 0.98}, {0, 0, 1}, 0.105, 0.03};
  // Object 0.98 m in front: 1/si = 1/f - 1/so -> si = 0.1176 m, M = 0.12.
  const double s_i = 1.0 / (1.0 / 0.105 - 1.0 / 0.98);
  const Vec3 object{1e-3, 0, 0};
  for (const double h : {-0.012, -0.004, 0.0, 0.007, 0.011}) {
    const auto out = propagate_thin_lens(make_ray(object, Vec3{h, 0, 0.98} - object), lens);
    REQUIRE(out.ok());
    const double t = (0.98 + s_i - out.ray.origin.z) / out.ray.dir.z;
    const Vec3 image = out.ray.origin + out.ray.dir * t;
    CHECK(image.x == doctest::Approx(-0.12 * object.x).epsilon(1e-10));
    CHECK(std::abs(image.y) < 1e-15);
  }
}

TEST_CASE("empty chains and composed chains behave consistently") {
  const Ray ray = make_ray({1e-3, 0, 0}, {0.001, 0, 1});
  CHECK(norm(propagate_chain(ray, {}).ray.dir - ray.dir) == 0.0);  // identity

  const Aperture stop{{0, 0, 0.98}, {0, 0, 1}, 105e-3 / (2 * 11.0)};
  CHECK(stop.radius == doctest::Approx(4.7727e-3).epsilon(1e-4));  // f/11 pupil

  std::vector<OpticalElement> chain;
  chain.push_back(stop);
  chain.push_back(ThinLensIdeal{{0, 0, 0.98}, {0, 0, 1}, 0.105, 0.03});

  const auto chained = propagate_chain(ray, chain);
  const auto manual_1 = apply_aperture(ray, stop);
  const auto manual_2 = propagate_thin_lens(manual_1.ray, std::get<ThinLensIdeal>(chain[1]));
  REQUIRE(chained.ok());
  CHECK(norm(chained.ray.dir - manual_2.ray.dir) == 0.0);
  CHECK(norm(chained.ray.origin - manual_2.ray.origin) == 0.0);
}

TEST_CASE("parallel-faced windows at ambient index are direction-neutral") {
  // Flat-flat "lens" with glass equal to ambient: direction identity.
  const auto window = make_singlet({0, 0, 0.5}, {0, 0, 1},
                                   std::numeric_limits<double>::infinity(),
                                   std::numeric_limits<double>::infinity(), 0.003, 1.0, 0.05, 1.0);
  const Ray ray = make_ray({0.002, -0.001, 0}, {0.01, 0.02, 1.0});
  const auto out = propagate_through_lens(ray, window);
  REQUIRE(out.ok());
  CHECK(norm(out.ray.dir - ray.dir) < 1e-15);

  // A real glass window restores the direction after the second face.
  const auto glass = make_singlet({0, 0, 0.5}, {0, 0, 1},
                                  std::numeric_limits<double>::infinity(),
                                  std::numeric_limits<double>::infinity(), 0.003, 1.52, 0.05, 1.0);
  const auto through = propagate_through_lens(ray, glass);
  REQUIRE(through.ok());
  CHECK(norm(through.ray.dir - ray.dir) < 1e-12);
}

TEST_CASE("mirror reflection folds rays at the surface") {
  SphericalSurface plane;
  plane.vertex = {0, 0, 1.0};
  plane.axis = {0, 0, 1};
  plane.aperture_radius = 2.0;
  const Mirror mirror{plane};
  const auto out = reflect_on_mirror(make_ray({0, 0, 0}, {1, 0, 1}), mirror);
  REQUIRE(out.ok());
  CHECK(norm(out.ray.dir - normalized(Vec3{1, 0, -1})) < 1e-12);
  CHECK(out.ray.origin.z == doctest::Approx(1.0));
}

TEST_CASE("tir through a lens reports a blocked ray") {
  // Steep ray into a strongly curved back surface from inside the glass.
  const auto lens = make_singlet({0, 0, 0}, {0, 0, 1}, 0.012, -0.012, 0.004, 1.9, 0.022);
  const auto out = propagate_through_lens(make_ray({0.0105, 0, -0.01}, {0, 0, 1}), lens);
  CHECK(!out.ok());
}
