// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#include "raybos/validate.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <stdexcept>

#include "raybos/bos.hpp"
#include "raybos/engine.hpp"
#include "raybos/grin.hpp"
#include "raybos/optics.hpp"
#include "raybos/scene.hpp"
#include "raybos/sensor.hpp"

namespace raybos {

namespace {

constexpr double kDeg = 180.0 / std::numbers::pi;

std::string fmt(const char* format, auto... args) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), format, args...);
  return buf;
}

void add_check(SuiteResult& result, const std::string& name, bool passed,
               const std::string& detail) {
  result.checks.push_back({name, passed, detail});
}

AnalyticField make_gaussian_index_field(double amplitude, double w) {
  const double inv_w2 = 1.0 / (w * w);
  auto n_fn = [amplitude, inv_w2](const Vec3& p) {
    return 1.0 + amplitude * std::exp(-norm2(p) * inv_w2);
  };
  auto grad_fn = [amplitude, inv_w2](const Vec3& p) {
    const double e = amplitude * std::exp(-norm2(p) * inv_w2);
    return p * (-2.0 * inv_w2 * e);
  };
  return AnalyticField(n_fn, grad_fn, {{-0.05, -0.05, -0.05}, {0.05, 0.05, 0.05}});
}

SuiteResult snell_suite() {
  SuiteResult result;
  result.suite = "snell";

  // 30 degrees from air into glass 1.5.
  const Vec3 normal{0.0, 0.0, -1.0};
  const double th_i = 30.0 / kDeg;
  const Vec3 d{std::sin(th_i), 0.0, std::cos(th_i)};
  const auto t = refract(d, normal, 1.0, 1.5);
  double th_f_deg = 0.0;
  if (t) th_f_deg = std::atan2(t->x, t->z) * kDeg;
  add_check(result, "refraction angle 1.0->1.5 at 30 deg",
            t.has_value() && std::abs(th_f_deg - 19.4712) < 1e-3,
            fmt("theta_f = %.4f deg, expected 19.4712 deg", th_f_deg));

  // 60 degrees from glass toward air: no real transmitted angle.
  const double th_tir = 60.0 / kDeg;
  const Vec3 d_tir{std::sin(th_tir), 0.0, std::cos(th_tir)};
  const auto t_tir = refract(d_tir, normal, 1.5, 1.0);
  add_check(result, "total internal reflection 1.5->1.0 at 60 deg", !t_tir.has_value(),
            fmt("sin(theta_f) = %.3f > 1 -> TIR %s", 1.5 * std::sin(th_tir),
                t_tir ? "missed" : "signaled"));

  // Tangential invariant n_i |d x n| = n_f |t x n| over random cases.
  const int cases = 100000;
  double worst = 0.0;
  double worst_unit = 0.0;
  int refracted = 0;
  for (int i = 0; i < cases; ++i) {
    CounterRng rng(0x5e11, 0, static_cast<std::uint64_t>(i));
    const double cz = rng.uniform(-1.0, 1.0);
    const double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double s = std::sqrt(std::max(0.0, 1.0 - cz * cz));
    const Vec3 n{s * std::cos(phi), s * std::sin(phi), cz};
    Vec3 e1, e2;
    plane_basis(n, e1, e2);
    const double cos_i = rng.uniform(0.05, 1.0);
    const double az = rng.uniform(0.0, 2.0 * std::numbers::pi);
    const double sin_i = std::sqrt(1.0 - cos_i * cos_i);
    const Vec3 dir = -n * cos_i + (e1 * std::cos(az) + e2 * std::sin(az)) * sin_i;
    const double n_i = rng.uniform(1.0, 2.0);
    const double n_f = rng.uniform(1.0, 2.0);
    const auto out = refract(dir, n, n_i, n_f);
    if (!out) continue;
    ++refracted;
    worst = std::max(worst, std::abs(n_i * norm(cross(dir, n)) - n_f * norm(cross(*out, n))));
    worst_unit = std::max(worst_unit, std::abs(norm(*out) - 1.0));
  }
  add_check(result, "tangential Snell invariant over random cases",
            worst < 1e-12 && worst_unit < 1e-12,
            fmt("max deviation %.2e over %d refracted / %d cases", worst, refracted, cases));

  result.passed = true;
  for (const auto& c : result.checks) result.passed = result.passed && c.passed;
  return result;
}

SuiteResult rk4_convergence_suite() {
  SuiteResult result;
  result.suite = "rk4-convergence";

  const AnalyticField field = make_gaussian_index_field(0.01, 0.01);
  const Vec3 start{0.004, 0.0, -0.04};
  const Vec3 dir{0.0, 0.0, 1.0};
  const double span = 0.08;

  auto integrate = [&](int steps) {
    const double h = span / steps;
    RayState state{start, dir * field.sample(start)->n};
    for (int i = 0; i < steps; ++i) state = rk4_step(state, field, h);
    return state;
  };

  const int base = 128;
  const RayState s1 = integrate(base);
  const RayState s2 = integrate(base * 2);
  const RayState s4 = integrate(base * 4);
  const RayState ref = integrate(base * 64);

  const double d12 = norm(s1.r - s2.r);
  const double d24 = norm(s2.r - s4.r);
  const double order = std::log2(d12 / d24);
  add_check(result, "Richardson order estimate >= 3.5", order >= 3.5,
            fmt("order = %.2f from step halvings (%d/%d/%d steps)", order, base, base * 2,
                base * 4));

  result.table.push_back("delta_xi,position_error_m");
  for (int mult : {1, 2, 4, 8}) {
    const RayState s = integrate(base * mult);
    result.table.push_back(fmt("%.6e,%.6e", span / (base * mult), norm(s.r - ref.r)));
  }

  // Eikonal norm conservation, |t| / n(r) over 1000 steps.
  const double h = 5e-5;
  RayState state{{0.005, 0.0, -0.025}, {}};
  state.t = dir * field.sample(state.r)->n;
  double drift = 0.0;
  for (int i = 0; i < 1000; ++i) {
    state = rk4_step(state, field, h);
    const auto s = field.sample(state.r);
    if (!s) break;
    drift = std::max(drift, std::abs(norm(state.t) / s->n - 1.0));
  }
  add_check(result, "eikonal norm |T|/n drift < 1e-6 over 1000 steps", drift < 1e-6,
            fmt("max drift = %.2e", drift));

  result.passed = result.checks[0].passed && result.checks[1].passed;
  return result;
}

SuiteResult lens_focus_suite() {
  SuiteResult result;
  result.suite = "lens-focus";

  const double r_curv = 0.1;
  const double glass = 1.5;
  const LensElement lens =
      make_singlet({0.0, 0.0, 0.0}, {0.0, 0.0, 1.0}, r_curv, -r_curv, 0.004, glass, 0.04);
  const double f_lensmaker = 1.0 / ((glass - 1.0) * (1.0 / r_curv - 1.0 / -r_curv));

  auto crossing_z = [&lens](double h) {
    Ray probe;
    probe.origin = {h, 0.0, -0.05};
    probe.dir = {0.0, 0.0, 1.0};
    const auto out = propagate_through_lens(probe, lens);
    if (!out.ok()) throw std::runtime_error("lens-focus: probe blocked");
    return out.ray.origin.z - out.ray.origin.x * out.ray.dir.z / out.ray.dir.x;
  };
  auto efl = [&lens](double h) {
    Ray probe;
    probe.origin = {h, 0.0, -0.05};
    probe.dir = {0.0, 0.0, 1.0};
    const auto out = propagate_through_lens(probe, lens);
    if (!out.ok()) throw std::runtime_error("lens-focus: probe blocked");
    return -h / (out.ray.dir.x / out.ray.dir.z);
  };

  const double efl_paraxial = efl(5e-4);
  add_check(result, "paraxial focus within 2% of lensmaker focal length",
            std::abs(efl_paraxial - f_lensmaker) / f_lensmaker < 0.02,
            fmt("EFL = %.4f m vs lensmaker %.4f m (%.2f%%)", efl_paraxial, f_lensmaker,
                100.0 * std::abs(efl_paraxial - f_lensmaker) / f_lensmaker));

  const double z_paraxial = crossing_z(5e-4);
  const double z_marginal = crossing_z(0.015);
  add_check(result, "marginal rays focus short of paraxial focus", z_marginal < z_paraxial,
            fmt("z_marginal = %.4f m < z_paraxial = %.4f m (longitudinal shift %.2f mm)",
                z_marginal, z_paraxial, 1e3 * (z_marginal - z_paraxial)));

  result.passed = result.checks[0].passed && result.checks[1].passed;
  return result;
}

SuiteResult energy_suite() {
  SuiteResult result;
  result.suite = "energy";

  SensorModel sensor;
  sensor.center = {0.0, 0.0, 0.0};
  sensor.normal = {0.0, 0.0, -1.0};
  sensor.e_u = {1.0, 0.0, 0.0};
  sensor.e_v = {0.0, 1.0, 0.0};
  sensor.width_px = 64;
  sensor.height_px = 64;
  sensor.pitch = 1e-5;

  const double d_tau = 47.22e-6;
  const double sigma = 0.25 * d_tau;
  const Vec2 center{0.37 * sensor.pitch, -0.22 * sensor.pitch};
  ImageBuffer img(sensor.width_px, sensor.height_px);
  accumulate_spot(img, sensor, center, d_tau, 1.0);

  double sum = 0.0;
  for (const double v : img.data) sum += v;
  add_check(result, "interior spot pixel sum equals deposited energy (1e-6)",
            std::abs(sum - 1.0) < 1e-6, fmt("pixel sum = %.12f", sum));

  // Quadrature oracle: Simpson integration of the Gaussian over each
  // window pixel, normalized over the window exactly like the deposit.
  const PixelWindow w = spot_pixel_window(sensor, img.width, img.height, center, d_tau);
  auto gauss_1d_simpson = [&](double a, double b, double mu) {
    const int n = 512;  // even; resolves the window-wide integrals too
    const double step = (b - a) / n;
    double acc = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double x = a + i * step;
      const double f = std::exp(-(x - mu) * (x - mu) / (2.0 * sigma * sigma));
      acc += f * (i == 0 || i == n ? 1.0 : (i % 2 ? 4.0 : 2.0));
    }
    return acc * step / 3.0;
  };
  auto col_edge = [&](int c) { return (c - 0.5 * img.width) * sensor.pitch; };
  auto row_edge_v = [&](int r) { return (0.5 * img.height - r) * sensor.pitch; };

  double mass_u = gauss_1d_simpson(col_edge(w.c0), col_edge(w.c1 + 1), center.x);
  double mass_v = gauss_1d_simpson(row_edge_v(w.r1 + 1), row_edge_v(w.r0), center.y);
  double worst = 0.0;
  for (int r = w.r0; r <= w.r1; ++r) {
    for (int c = w.c0; c <= w.c1; ++c) {
      const double qu = gauss_1d_simpson(col_edge(c), col_edge(c + 1), center.x) / mass_u;
      const double qv = gauss_1d_simpson(row_edge_v(r + 1), row_edge_v(r), center.y) / mass_v;
      worst = std::max(worst, std::abs(img.at(c, r) - qu * qv));
    }
  }
  add_check(result, "per-pixel erf integrals match quadrature oracle", worst < 1e-9,
            fmt("max |erf - quadrature| = %.2e", worst));

  double cx = 0.0, cy = 0.0;
  for (int r = 0; r < img.height; ++r) {
    for (int c = 0; c < img.width; ++c) {
      const double u_mid = (c + 0.5 - 0.5 * img.width) * sensor.pitch;
      const double v_mid = (0.5 * img.height - r - 0.5) * sensor.pitch;
      cx += img.at(c, r) * u_mid;
      cy += img.at(c, r) * v_mid;
    }
  }
  const double centroid_err =
      std::max(std::abs(cx / sum - center.x), std::abs(cy / sum - center.y)) / sensor.pitch;
  add_check(result, "spot centroid error < 1e-3 px", centroid_err < 1e-3,
            fmt("centroid error = %.2e px", centroid_err));

  result.passed = true;
  for (const auto& c : result.checks) result.passed = result.passed && c.passed;
  return result;
}

// Mean per-dot displacement of a uniform-gradient slab against the
// small-deflection formula delta = M Z_D K grad_rho L_z / n0.
SuiteResult bos_uniform_suite() {
  SuiteResult result;
  result.suite = "bos-uniform";

  const ExperimentConfig cfg = make_bos_uniform_config();
  const BosRunResult run = bos_run(cfg);

  const double n0 = gladstone_dale(cfg.ambient_rho, cfg.gladstone_dale);
  const double expected_m = cfg.bos.magnification * cfg.geometry.z_dot_to_volume *
                            cfg.gladstone_dale * cfg.medium.grad.x * cfg.medium.depth / n0;
  const double expected_px = expected_m / cfg.sensor.pitch;
  add_check(result, "displacement formula cross-check", std::abs(expected_px - 0.0678) < 5e-4,
            fmt("predicted %.4f px (frozen hand value 0.0678 px)", expected_px));

  double mean_dx = 0.0, mean_dy = 0.0;
  long valid = 0, positive = 0;
  for (const auto& s : run.scattered) {
    if (!s.valid) continue;
    ++valid;
    mean_dx += s.delta.x;
    mean_dy += s.delta.y;
    if (s.delta.x > 0.0) ++positive;
  }
  mean_dx /= valid > 0 ? valid : 1;
  mean_dy /= valid > 0 ? valid : 1;
  const double mean_dx_px = mean_dx / run.pixel_pitch;
  const double rel_err = std::abs(mean_dx_px - expected_px) / expected_px;

  add_check(result, "mean per-dot displacement within 5% of prediction", rel_err < 0.05,
            fmt("mean dx = %.4f px vs %.4f px (%.2f%%), %ld dots", mean_dx_px, expected_px,
                100.0 * rel_err, valid));
  add_check(result, "deflection sign consistent across dots", valid > 0 && positive == valid,
            fmt("%ld of %ld dots deflect toward +x", positive, valid));
  add_check(result, "transverse component near zero",
            std::abs(mean_dy / run.pixel_pitch) < 0.05 * expected_px,
            fmt("mean dy = %.2e px", mean_dy / run.pixel_pitch));

  result.passed = true;
  for (const auto& c : result.checks) result.passed = result.passed && c.passed;
  return result;
}

SuiteResult bos_blob_suite() {
  SuiteResult result;
  result.suite = "bos-blob";

  const ExperimentConfig cfg = make_bos_blob_config();
  const BosRunResult run = bos_run(cfg);

  add_check(result, "theory/ray-trace correlation > 0.95",
            run.metrics.pearson_correlation > 0.95,
            fmt("Pearson correlation = %.4f over %d nodes", run.metrics.pearson_correlation,
                run.metrics.nodes));
  add_check(result, "ray-traced peak does not exceed theoretical peak",
            run.metrics.peak_b <= run.metrics.peak_a,
            fmt("measured peak %.4f px <= theoretical peak %.4f px", run.metrics.peak_b,
                run.metrics.peak_a));
  const int total_nodes = cfg.bos.grid_nx * cfg.bos.grid_ny;
  add_check(result, "comparison grid well covered", run.metrics.nodes > 0.8 * total_nodes,
            fmt("%d of %d nodes unmasked", run.metrics.nodes, total_nodes));

  result.passed = true;
  for (const auto& c : result.checks) result.passed = result.passed && c.passed;
  return result;
}

}  // namespace

ExperimentConfig make_bos_uniform_config() {
  ExperimentConfig cfg;
  cfg.source = {"dots", {0.012, 0.012}, 20.0, -1, 1e-4, 7, {}, 0, 5e-6};
  cfg.medium.type = "uniform_gradient_slab";
  cfg.medium.rho0 = 1.225;
  cfg.medium.grad = {10.0, 0.0};
  cfg.medium.extent = {0.048, 0.048};
  cfg.medium.depth = 0.01;
  cfg.medium.nx = cfg.medium.ny = 25;
  cfg.medium.nz = 5;
  cfg.geometry = {0.25, 0.73};  // conjugates give magnification 0.12 at f = 105 mm
  cfg.optics.push_back({.type = "aperture", .f_number = 11.0});
  cfg.optics.push_back({.type = "thin_lens", .focal_length = 0.105, .diameter = 0.03});
  cfg.sensor.width = cfg.sensor.height = 128;
  cfg.sensor.pitch = 10e-6;
  cfg.bundle.rays_per_source = 10000;
  cfg.bundle.seed = 1234;
  cfg.bos.magnification = 0.12;
  cfg.bos.grid_nx = cfg.bos.grid_ny = 9;
  cfg.bos.grid_extent = {0.008, 0.008};
  return cfg;
}

ExperimentConfig make_bos_blob_config() {
  ExperimentConfig cfg;
  cfg.source = {"dots", {0.043, 0.043}, 20.0, -1, 1e-4, 11, {}, 0, 5e-6};
  cfg.medium.type = "gaussian_blob_slab";
  cfg.medium.rho0 = 1.225;
  cfg.medium.amplitude = 0.5;
  cfg.medium.sigma = 0.004;
  cfg.medium.extent = {0.032, 0.032};
  cfg.medium.depth = 0.01;
  cfg.medium.nx = cfg.medium.ny = 129;
  cfg.medium.nz = 3;
  cfg.geometry = {0.25, 0.73};
  cfg.optics.push_back({.type = "aperture", .f_number = 11.0});
  cfg.optics.push_back({.type = "thin_lens", .focal_length = 0.105, .diameter = 0.03});
  cfg.sensor.width = cfg.sensor.height = 560;
  cfg.sensor.pitch = 10e-6;
  cfg.bundle.rays_per_source = 2000;
  cfg.bundle.seed = 99;
  cfg.bos.magnification = 0.12;
  cfg.bos.grid_nx = cfg.bos.grid_ny = 29;
  cfg.bos.grid_extent = {0.028, 0.028};
  return cfg;
}

ExperimentConfig make_null_test_config() {
  ExperimentConfig cfg = make_bos_uniform_config();
  cfg.source.extent = {0.02, 0.02};
  cfg.source.count = 100;
  cfg.source.seed = 5;
  cfg.medium.grad = {0.0, 0.0};  // uniform density: zero gradient everywhere
  cfg.medium.nx = cfg.medium.ny = 9;
  cfg.bundle.seed = 21;
  cfg.bos.grid_nx = cfg.bos.grid_ny = 5;
  cfg.bos.grid_extent = {0.012, 0.012};
  cfg.bos.min_dots = 4;
  return cfg;
}

ExperimentConfig make_determinism_config() {
  ExperimentConfig cfg = make_bos_blob_config();
  cfg.source.extent = {0.01, 0.01};
  cfg.source.count = 60;
  cfg.source.seed = 3;
  cfg.medium.nx = cfg.medium.ny = 65;
  cfg.sensor.width = cfg.sensor.height = 256;
  cfg.bundle.rays_per_source = 1500;
  cfg.bundle.seed = 17;
  return cfg;
}

std::vector<std::string> validation_suite_names() {
  return {"snell", "rk4-convergence", "lens-focus", "energy", "bos-uniform", "bos-blob"};
}

SuiteResult run_validation_suite(const std::string& name) {
  const auto t0 = std::chrono::steady_clock::now();
  SuiteResult result;
  if (name == "snell")
    result = snell_suite();
  else if (name == "rk4-convergence")
    result = rk4_convergence_suite();
  else if (name == "lens-focus")
    result = lens_focus_suite();
  else if (name == "energy")
    result = energy_suite();
  else if (name == "bos-uniform")
    result = bos_uniform_suite();
  else if (name == "bos-blob")
    result = bos_blob_suite();
  else
    throw std::runtime_error("unknown validation suite '" + name + "'");
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return result;
}

}  // namespace raybos
