// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#include "doctest.h"

#include <stdexcept>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "raybos/bos.hpp"
#include "raybos/scene.hpp"

using namespace raybos;

namespace {

GradientSlice uniform_slice(double gx, double gy, int n = 11, double extent = 0.032) {
  GradientSlice s;
  s.nx = s.ny = n;
  s.x0 = s.y0 = -0.5 * extent;
  s.dx = s.dy = extent / (n - 1);
  s.grad.assign(static_cast<std::size_t>(n) * n, {gx, gy});
  return s;
}

const BosParams kTable1Params{0.12, 0.25, 2.26e-4, 1.00027685, 0.01};

}  // namespace

TEST_CASE("theoretical displacement of a zero gradient field is zero") {
  const auto field = theoretical_displacement(uniform_slice(0.0, 0.0), kTable1Params);
  for (const auto& d : field.delta) {
    CHECK(d.x == 0.0);
    CHECK(d.y == 0.0);
  }
}

TEST_CASE("theoretical displacement reproduces the hand-computed value") {
  // M Z_D K grad L_z / n0 for a 10 kg/m^4 gradient = 6.778e-7 m, which is
  // 0.0678 px at 10 um pitch.
  const auto field = theoretical_displacement(uniform_slice(10.0, 0.0), kTable1Params);
  const double expected =
      0.12 * 0.25 * 2.26e-4 * 10.0 * 0.01 / 1.00027685;
  CHECK(expected == doctest::Approx(6.778e-7).epsilon(1e-4));
  for (const auto& d : field.delta) CHECK(d.x == doctest::Approx(expected).epsilon(1e-12));
  CHECK(field.delta[0].x / 10e-6 == doctest::Approx(0.0678).epsilon(2e-3));
}

TEST_CASE("theoretical displacement is homogeneous in its inputs") {
  const auto base = theoretical_displacement(uniform_slice(7.0, -3.0), kTable1Params);

  auto scaled_params = kTable1Params;
  scaled_params.z_d *= 2.0;
  const auto dbl_zd = theoretical_displacement(uniform_slice(7.0, -3.0), scaled_params);
  CHECK(dbl_zd.delta[5].x == doctest::Approx(2.0 * base.delta[5].x).epsilon(1e-12));

  auto deep = kTable1Params;
  deep.depth *= 2.0;
  const auto dbl_lz = theoretical_displacement(uniform_slice(7.0, -3.0), deep);
  CHECK(dbl_lz.delta[5].y == doctest::Approx(2.0 * base.delta[5].y).epsilon(1e-12));

  const auto dbl_grad = theoretical_displacement(uniform_slice(14.0, -6.0), kTable1Params);
  CHECK(dbl_grad.delta[5].x == doctest::Approx(2.0 * base.delta[5].x).epsilon(1e-12));
}

TEST_CASE("per-dot displacements subtract bundle means") {
  const std::vector<Vec2> positions{{0, 0}, {1e-3, 0}, {0, 2e-3}};
  std::vector<DotHitStats> ref(3), grad(3);
  for (int d = 0; d < 3; ++d) {
    ref[d].hit_sum = Vec2{1e-4 * d, -2e-5 * d} * 100.0;
    ref[d].landed = 100;
    grad[d] = ref[d];
  }

  // Identical hits give zero displacement.
  auto zero = measure_dot_displacements(positions, ref, grad);
  for (const auto& s : zero) {
    REQUIRE(s.valid);
    CHECK(s.delta.x == 0.0);
    CHECK(s.delta.y == 0.0);
  }

  // A constant shift of every hit appears verbatim.
  const Vec2 shift{3.2e-7, -1.1e-7};
  for (int d = 0; d < 3; ++d) grad[d].hit_sum += shift * static_cast<double>(grad[d].landed);
  auto shifted = measure_dot_displacements(positions, ref, grad);
  for (const auto& s : shifted) {
    CHECK(s.delta.x == doctest::Approx(shift.x).epsilon(1e-12));
    CHECK(s.delta.y == doctest::Approx(shift.y).epsilon(1e-12));
  }

  // Dots with no surviving rays in either trace are masked.
  grad[1].landed = 0;
  auto masked = measure_dot_displacements(positions, ref, grad);
  CHECK(masked[0].valid);
  CHECK(!masked[1].valid);
  CHECK(masked[2].valid);
}

TEST_CASE("gridding a constant scattered field returns the constant") {
  GridSpec grid{9, 9, -4e-3, -4e-3, 1e-3, 1e-3, 0, 0, 4};
  std::vector<ScatteredDisplacement> scattered;
  CounterRng rng(3);
  for (int i = 0; i < 400; ++i)
    scattered.push_back(
        {{rng.uniform(-4e-3, 4e-3), rng.uniform(-4e-3, 4e-3)}, {1.5e-7,-0.5e-7}, true});
  const auto field = grid_displacements(scattered, grid);
  int valid = 0;
  for (std::size_t q = 0; q < field.delta.size(); ++q) {
    if (!field.mask[q]) continue;
    ++valid;
    CHECK(field.delta[q].x == doctest::Approx(1.5e-7).epsilon(1e-12));
    CHECK(field.delta[q].y == doctest::Approx(-0.5e-7).epsilon(1e-12));
  }
  CHECK(valid > 60);
}

TEST_CASE("gridding reproduces a linear plane within binning error") {
  GridSpec grid{9, 9, -4e-3, -4e-3, 1e-3, 1e-3, 0, 0, 4};
  std::vector<ScatteredDisplacement> scattered;
  CounterRng rng(17);
  auto plane = [](const Vec2& p) { return Vec2{2e-5 * p.x, -1e-5 * p.y + 3e-9}; };
  for (int i = 0; i < 20000; ++i) {
    const Vec2 p{rng.uniform(-4.5e-3, 4.5e-3), rng.uniform(-4.5e-3, 4.5e-3)};
    scattered.push_back({p, plane(p), true});
  }
  const auto field = grid_displacements(scattered, grid);
  for (int j = 1; j < 8; ++j)
    for (int i = 1; i < 8; ++i) {
      const std::size_t q = field.index(i, j);
      REQUIRE(field.mask[q]);
      const Vec2 expected = plane({field.node_x(i), field.node_y(j)});
      // Binning error ~ slope x cell size / sqrt(samples); interior nodes.
      CHECK(field.delta[q].x == doctest::Approx(expected.x).epsilon(0.02));
    }
}

TEST_CASE("a single dot fills only its cell neighborhood") {
  GridSpec grid{9, 9, -4e-3, -4e-3, 1e-3, 1e-3, 0, 0, 1};
  const std::vector<ScatteredDisplacement> scattered{{{0.3e-3, 0.2e-3}, {1e-7, 0}, true}};
  const auto field = grid_displacements(scattered, grid);
  int valid = 0;
  for (int j = 0; j < 9; ++j)
    for (int i = 0; i < 9; ++i) {
      if (!field.mask[field.index(i, j)]) continue;
      ++valid;
      // Unmasked nodes must sit inside the dot's bin.
      CHECK(std::abs(field.node_x(i) - 0.3e-3) < 1.1e-3);
      CHECK(std::abs(field.node_y(j) - 0.2e-3) < 1.1e-3);
      CHECK(field.delta[field.index(i, j)].x == doctest::Approx(1e-7));
    }
  CHECK(valid >= 1);
  CHECK(valid <= 4);
}

TEST_CASE("too few dots is an error") {
  GridSpec grid{9, 9, -4e-3, -4e-3, 1e-3, 1e-3, 0, 0, 4};
  const std::vector<ScatteredDisplacement> scattered{{{0, 0}, {1e-7, 0}, true},
                                                     {{1e-3, 0}, {1e-7, 0}, true},
                                                     {{0, 1e-3}, {1e-7, 0}, true}};
  CHECK_THROWS_AS(grid_displacements(scattered, grid), std::runtime_error);
}

TEST_CASE("field comparison metrics") {
  GridSpec grid{9, 9, -4e-3, -4e-3, 1e-3, 1e-3, 0, 0, 1};
  DisplacementField a;
  a.nx = a.ny = 9;
  a.x0 = a.y0 = -4e-3;
  a.dx = a.dy = 1e-3;
  a.delta.resize(81);
  a.mask.assign(81, 1);
  for (int j = 0; j < 9; ++j)
    for (int i = 0; i < 9; ++i) {
      const double x = a.node_x(i), y = a.node_y(j);
      a.delta[a.index(i, j)] = {std::sin(800.0 * x), std::cos(700.0 * y)};
    }

  // Identical fields: zero error, perfect correlation.
  auto self = compare_fields(a, a);
  CHECK(self.rms_error == 0.0);
  CHECK(self.pearson_correlation == doctest::Approx(1.0));

  // Constant offset on both components: rms = |c|, correlation stays 1.
  DisplacementField b = a;
  const double c = 2.5e-7;
  for (auto& d : b.delta) d = d + Vec2{c, c};
  auto offset = compare_fields(a, b);
  CHECK(offset.rms_error == doctest::Approx(c).epsilon(1e-9));
  CHECK(offset.pearson_correlation == doctest::Approx(1.0).epsilon(1e-9));

  // Box-filtered field: correlation drops below 1, peak does not grow.
  DisplacementField smooth = a;
  for (int j = 1; j < 8; ++j)
    for (int i = 1; i < 8; ++i) {
      Vec2 acc{};
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) acc += a.delta[a.index(i + di, j + dj)];
      smooth.delta[smooth.index(i, j)] = acc / 9.0;
    }
  auto smoothed = compare_fields(a, smooth);
  CHECK(smoothed.pearson_correlation < 1.0);
  CHECK(smoothed.pearson_correlation > 0.5);
  CHECK(smoothed.peak_b <= smoothed.peak_a);

  // Mismatched grids are rejected.
  DisplacementField other = a;
  other.dx *= 2.0;
  CHECK_THROWS_AS(compare_fields(a, other), std::invalid_argument);
}

TEST_CASE("displacement csv export has the declared header") {
  DisplacementField f;
  f.nx = f.ny = 2;
  f.x0 = f.y0 = 0.0;
  f.dx = f.dy = 1e-3;
  f.delta.assign(4, {1e-7, -2e-7});
  f.mask.assign(4, 1);
  const auto path = (std::filesystem::temp_directory_path() / "raybos_disp.csv").string();
  write_displacement_csv(f, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "x,y,dx,dy,mask");
  int rows = 0;
  std::string line;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 4);
  std::filesystem::remove(path);
}
