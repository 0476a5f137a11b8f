// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <set>

#include "raybos/core.hpp"

using namespace raybos;

TEST_CASE("vector algebra basics") {
  const Vec3 a{1.0, 2.0, 3.0};
  const Vec3 b{-2.0, 0.5, 4.0};
  CHECK(dot(a, b) == doctest::Approx(11.0));
  const Vec3 c = cross(Vec3{1, 0, 0}, Vec3{0, 1, 0});
  CHECK(c.z == doctest::Approx(1.0));
  CHECK(norm(normalized(a)) == doctest::Approx(1.0));
}

TEST_CASE("plane basis is orthonormal") {
  for (const Vec3 axis : {Vec3{0, 0, 1}, Vec3{1, 0, 0}, normalized(Vec3{1, 2, 3})}) {
    Vec3 e1, e2;
    plane_basis(axis, e1, e2);
    CHECK(std::abs(dot(e1, e2)) < 1e-14);
    CHECK(std::abs(dot(e1, axis)) < 1e-14);
    CHECK(norm(e1) == doctest::Approx(1.0));
    CHECK(norm(e2) == doctest::Approx(1.0));
  }
}

TEST_CASE("counter rng is deterministic and splittable") {
  CounterRng a(42, 7, 3);
  CounterRng b(42, 7, 3);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());

  // Different keys give different streams.
  CounterRng c(42, 7, 4);
  CounterRng d(42, 8, 3);
  CounterRng e(43, 7, 3);
  CounterRng base(42, 7, 3);
  const auto v = base.next_u64();
  CHECK(v != c.next_u64());
  CHECK(v != d.next_u64());
  CHECK(v != e.next_u64());
}

TEST_CASE("counter rng uniforms live in [0, 1) and look uniform") {
  CounterRng rng(123);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  CHECK(sum / n == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("aabb contains its faces") {
  const Aabb box{{0, 0, 0}, {1, 2, 3}};
  CHECK(box.contains({0, 0, 0}));
  CHECK(box.contains({1, 2, 3}));
  CHECK(box.contains({0.5, 1, 1.5}));
  CHECK(!box.contains({1.0001, 1, 1}));
  CHECK(box.extent().y == doctest::Approx(2.0));
}
