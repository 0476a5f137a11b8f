// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#include "raybos/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "json.hpp"

#include "raybos/image_io.hpp"
#include "raybos/raygen.hpp"
#include "raybos/scene.hpp"

namespace raybos {

namespace {

constexpr std::uint64_t kCalibrationSource = 0xca1;

DensityVolume build_medium_volume(const ExperimentConfig& cfg) {
  const MediumConfig& m = cfg.medium;
  const double z_center = cfg.geometry.z_dot_to_volume;
  if (m.type == "gvol") {
    DensityVolume vol = load_density_volume(m.path);
    // Recenter on the optical axis at the configured stand-off distance.
    const Aabb b = vol.bounds();
    const Vec3 shift = Vec3{0.0, 0.0, z_center} - b.center();
    vol.origin += shift;
    return vol;
  }

  DensitySlice slice;
  slice.nx = m.nx;
  slice.ny = m.ny;
  slice.dx = m.extent.x / (m.nx - 1);
  slice.dy = m.extent.y / (m.ny - 1);
  slice.origin = {-0.5 * m.extent.x, -0.5 * m.extent.y};
  slice.rho.resize(static_cast<std::size_t>(m.nx) * m.ny);
  for (int j = 0; j < m.ny; ++j) {
    for (int i = 0; i < m.nx; ++i) {
      const double x = slice.origin.x + i * slice.dx;
      const double y = slice.origin.y + j * slice.dy;
      double rho = m.rho0;
      if (m.type == "uniform_gradient_slab") {
        rho += m.grad.x * x + m.grad.y * y;
      } else if (m.type == "gaussian_blob_slab") {
        rho += m.amplitude * std::exp(-(x * x + y * y) / (2.0 * m.sigma * m.sigma));
      }
      slice.rho[slice.index(i, j)] = static_cast<float>(rho);
    }
  }
  const double dz = m.depth / (m.nz - 1);
  return stack_2d_slice(slice, m.nz, dz, z_center - 0.5 * m.depth);
}

double paraxial_efl(const LensElement& lens) {
  const double h = 1e-4;
  Ray probe;
  probe.origin = {h, 0.0, lens.front.vertex.z - 0.01};
  probe.dir = {0.0, 0.0, 1.0};
  const auto out = propagate_through_lens(probe, lens);
  if (!out.ok()) throw std::runtime_error("engine: paraxial probe blocked by lens");
  const double slope = out.ray.dir.x / out.ray.dir.z;
  if (slope == 0.0) throw std::runtime_error("engine: lens is afocal at paraxial height");
  return -h / slope;
}

// Meridional crossing of two rays, as an absolute z.
double ray_crossing_z(const Ray& a, const Ray& b) {
  const double sa = a.dir.x / a.dir.z;
  const double sb = b.dir.x / b.dir.z;
  if (std::abs(sa - sb) < 1e-15) throw std::runtime_error("engine: autofocus rays are parallel");
  return (b.origin.x - a.origin.x + sa * a.origin.z - sb * b.origin.z) / (sa - sb);
}

struct Counters {
  long lost = 0;
  long blocked_aperture = 0;
  long blocked_miss = 0;
  long blocked_tir = 0;
  long sensor_miss = 0;

  Counters& operator+=(const Counters& o) {
    lost += o.lost;
    blocked_aperture += o.blocked_aperture;
    blocked_miss += o.blocked_miss;
    blocked_tir += o.blocked_tir;
    sensor_miss += o.sensor_miss;
    return *this;
  }
};

struct Deposit {
  Vec2 uv;
  double energy;
};

// Runs the full per-ray pipeline for one source point. Appends sensor
// deposits when a deposit sink is given.
void process_source(const SceneSetup& setup, bool with_field, std::uint64_t source_index,
                    const Vec3& source, DotHitStats& stats, Counters& counters,
                    std::vector<Deposit>* deposits) {
  const auto points = sample_aperture_points(setup.pupil, setup.bundle, source_index);
  const auto rays = emit_rays(source, points, setup.wavelength);
  for (const Ray& emitted : rays) {
    Ray ray = emitted;
    if (with_field && setup.field) {
      const TraceResult traced = trace_through_volume(ray, *setup.field, setup.step);
      if (!traced.ok()) {
        ++counters.lost;
        continue;
      }
      ray = traced.ray;
    }
    const OpticsResult optics = propagate_chain(ray, setup.elements);
    if (!optics.ok()) {
      switch (optics.reason) {
        case BlockReason::kApertureStop: ++counters.blocked_aperture; break;
        case BlockReason::kTotalInternalReflection: ++counters.blocked_tir; break;
        default: ++counters.blocked_miss; break;
      }
      continue;
    }
    const auto uv = intersect_sensor(optics.ray, setup.sensor);
    if (!uv) {
      ++counters.sensor_miss;
      continue;
    }
    stats.hit_sum += *uv;
    ++stats.landed;
    if (deposits) deposits->push_back({*uv, optics.ray.radiance});
  }
}

struct Tile {
  int c0 = 0, r0 = 0, w = 0, h = 0;
  std::vector<double> data;
};

// Accumulates one dot's deposits through a full-frame scratch buffer and
// cuts out the touched rectangle. The scratch region is zeroed afterwards
// so the buffer can be reused.
Tile make_tile(const SceneSetup& setup, const std::vector<Deposit>& deposits,
               ImageBuffer& scratch) {
  Tile tile;
  if (deposits.empty()) return tile;

  int c0 = scratch.width, c1 = -1, r0 = scratch.height, r1 = -1;
  for (const Deposit& d : deposits) {
    const PixelWindow w =
        spot_pixel_window(setup.sensor, scratch.width, scratch.height, d.uv, setup.d_tau);
    if (w.empty()) continue;
    c0 = std::min(c0, w.c0);
    c1 = std::max(c1, w.c1);
    r0 = std::min(r0, w.r0);
    r1 = std::max(r1, w.r1);
    accumulate_spot(scratch, setup.sensor, d.uv, setup.d_tau, d.energy);
  }
  if (c1 < c0 || r1 < r0) return tile;

  tile.c0 = c0;
  tile.r0 = r0;
  tile.w = c1 - c0 + 1;
  tile.h = r1 - r0 + 1;
  tile.data.resize(static_cast<std::size_t>(tile.w) * tile.h);
  for (int r = 0; r < tile.h; ++r) {
    double* src = &scratch.at(c0, r0 + r);
    std::copy(src, src + tile.w, tile.data.begin() + static_cast<std::size_t>(r) * tile.w);
    std::fill(src, src + tile.w, 0.0);
  }
  return tile;
}

void composite_tile(ImageBuffer& img, const Tile& tile) {
  for (int r = 0; r < tile.h; ++r) {
    double* dst = &img.at(tile.c0, tile.r0 + r);
    const double* src = tile.data.data() + static_cast<std::size_t>(r) * tile.w;
    for (int c = 0; c < tile.w; ++c) dst[c] += src[c];
  }
}

DisplacementField scale_field(DisplacementField field, double s) {
  for (Vec2& d : field.delta) d = d * s;
  return field;
}

void write_report(const RunReport& report, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("engine: cannot open " + path);
  out << report.to_json_string() << "\n";
}

std::vector<std::string> pgm_comments(const SceneSetup& setup) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "config=%016llx seed=%llu",
                static_cast<unsigned long long>(setup.config_hash),
                static_cast<unsigned long long>(setup.bundle.seed));
  return {std::string("raybos ") + buf};
}

}  // namespace

std::string RunReport::to_json_string() const {
  char hash_hex[32];
  std::snprintf(hash_hex, sizeof(hash_hex), "%016llx",
                static_cast<unsigned long long>(config_hash));
  nlohmann::json j{{"emitted", emitted},
                   {"landed", landed},
                   {"lost", lost},
                   {"blocked",
                    {{"aperture", blocked_aperture},
                     {"missed_element", blocked_miss},
                     {"tir", blocked_tir},
                     {"sensor_miss", blocked_sensor_miss}}},
                   {"wall_seconds", wall_seconds},
                   {"threads", threads},
                   {"config_hash", hash_hex}};
  return j.dump(2);
}

SceneSetup build_scene_setup(const ExperimentConfig& cfg) {
  cfg.validate();
  SceneSetup setup;
  setup.config_hash = cfg.physics_hash();
  setup.ambient_index = gladstone_dale(cfg.ambient_rho, cfg.gladstone_dale);
  setup.wavelength = cfg.bundle.wavelength;
  setup.bundle = {cfg.bundle.rays_per_source, cfg.bundle.sampling, cfg.bundle.seed};

  // Medium.
  setup.volume_center_z = cfg.geometry.z_dot_to_volume;
  double depth = cfg.medium.depth;
  if (cfg.medium.type != "none") {
    const DensityVolume vol = build_medium_volume(cfg);
    depth = (vol.nz - 1) * vol.spacing.z;
    setup.field = std::make_shared<GriddedField>(vol, cfg.gladstone_dale);
    const Vec3 sp = vol.spacing;
    setup.step.delta_xi = cfg.trace.delta_xi > 0.0
                              ? cfg.trace.delta_xi
                              : 0.5 * std::min({sp.x, sp.y, sp.z});
    if (cfg.trace.max_steps > 0) {
      setup.step.max_steps = cfg.trace.max_steps;
    } else {
      const double diag = norm(vol.bounds().extent());
      setup.step.max_steps = static_cast<int>(4.0 * diag / setup.step.delta_xi) + 64;
    }
  }

  // Optical train. Elements default to the lens plane; explicit z_m wins.
  const double z_lens = cfg.geometry.z_dot_to_volume + cfg.geometry.z_volume_to_lens;
  setup.lens_plane_z = z_lens;
  const Vec3 axis{0.0, 0.0, 1.0};

  double efl = 0.0;
  double last_exit_z = z_lens;
  int aperture_index = -1;
  std::vector<double> element_z(cfg.optics.size());
  for (std::size_t e = 0; e < cfg.optics.size(); ++e) {
    const ElementConfig& ec = cfg.optics[e];
    const double z = ec.has_z ? ec.z : z_lens;
    element_z[e] = z;
    if (ec.type == "thin_lens") {
      setup.elements.push_back(ThinLensIdeal{{0.0, 0.0, z}, axis, ec.focal_length, ec.diameter});
      if (efl == 0.0) efl = ec.focal_length;
      last_exit_z = std::max(last_exit_z, z);
    } else if (ec.type == "singlet") {
      const double r1 = ec.r1 == 0.0 ? std::numeric_limits<double>::infinity() : ec.r1;
      const double r2 = ec.r2 == 0.0 ? std::numeric_limits<double>::infinity() : ec.r2;
      const LensElement lens = make_singlet({0.0, 0.0, z}, axis, r1, r2, ec.thickness,
                                            ec.glass_index, ec.diameter, setup.ambient_index);
      if (efl == 0.0) efl = paraxial_efl(lens);
      setup.elements.push_back(lens);
      last_exit_z = std::max(last_exit_z, z + ec.thickness);
    } else if (ec.type == "aperture") {
      if (aperture_index < 0) aperture_index = static_cast<int>(e);
      setup.elements.push_back(Aperture{{0.0, 0.0, z}, axis, ec.radius});  // radius fixed below
    } else if (ec.type == "mirror_plane") {
      SphericalSurface s;
      s.vertex = {0.0, 0.0, z};
      s.axis = axis;
      s.aperture_radius = 0.5 * ec.diameter;
      setup.elements.push_back(Mirror{s});
    }
  }
  setup.focal_length = efl;

  // Entrance pupil: the first aperture, else the first lens rim.
  if (aperture_index >= 0) {
    const ElementConfig& ac = cfg.optics[aperture_index];
    double radius = ac.radius;
    if (radius <= 0.0) {
      if (efl <= 0.0)
        throw std::runtime_error("engine: aperture f_number needs a lens focal length");
      radius = efl / (2.0 * ac.f_number);
    }
    std::get<Aperture>(setup.elements[aperture_index]).radius = radius;
    setup.pupil = {{0.0, 0.0, element_z[aperture_index]}, axis, radius};
  } else {
    double lens_z = z_lens, lens_r = 0.0;
    for (std::size_t e = 0; e < cfg.optics.size(); ++e) {
      if (cfg.optics[e].type == "thin_lens" || cfg.optics[e].type == "singlet") {
        lens_z = element_z[e];
        lens_r = 0.499 * cfg.optics[e].diameter;
        break;
      }
    }
    if (lens_r <= 0.0) throw std::runtime_error("engine: no aperture or lens to aim rays at");
    setup.pupil = {{0.0, 0.0, lens_z}, axis, lens_r};
  }

  setup.f_number = cfg.sensor.f_number_override > 0.0
                       ? cfg.sensor.f_number_override
                       : (efl > 0.0 ? efl / (2.0 * setup.pupil.radius) : 0.0);

  // Sensor pose: autofocus intersects two near-axis rays from the target
  // plane traced through the actual chain.
  double sensor_z;
  if (cfg.sensor.distance > 0.0) {
    sensor_z = last_exit_z + cfg.sensor.distance;
  } else {
    const double h = 0.05 * setup.pupil.radius;
    Ray probes[2];
    for (int k = 0; k < 2; ++k) {
      const double sign = k == 0 ? 1.0 : -1.0;
      Ray r;
      r.origin = {0.0, 0.0, 0.0};
      r.dir = normalized(Vec3{sign * h, 0.0, setup.pupil.center.z});
      const OpticsResult out = propagate_chain(r, setup.elements);
      if (!out.ok()) throw std::runtime_error("engine: autofocus probe blocked");
      probes[k] = out.ray;
    }
    sensor_z = ray_crossing_z(probes[0], probes[1]);
    if (sensor_z <= last_exit_z)
      throw std::runtime_error("engine: autofocus found no real image behind the optics");
  }

  setup.sensor.center = {0.0, 0.0, sensor_z};
  setup.sensor.normal = {0.0, 0.0, -1.0};
  setup.sensor.e_u = {1.0, 0.0, 0.0};
  setup.sensor.e_v = {0.0, 1.0, 0.0};
  setup.sensor.width_px = cfg.sensor.width;
  setup.sensor.height_px = cfg.sensor.height;
  setup.sensor.pitch = cfg.sensor.pitch;
  setup.sensor.bit_depth = cfg.sensor.bit_depth;
  setup.sensor.window_sigmas = cfg.sensor.window_sigmas;
  setup.sensor.gain = 1.0;

  // Magnification: configured value, or measured with a chief ray from a
  // small off-axis offset.
  if (cfg.bos.magnification > 0.0) {
    setup.magnification = cfg.bos.magnification;
  } else {
    const double xt = 2e-4;
    Ray chief;
    chief.origin = {xt, 0.0, 0.0};
    chief.dir = normalized(setup.pupil.center - chief.origin);
    const OpticsResult out = propagate_chain(chief, setup.elements);
    if (!out.ok()) throw std::runtime_error("engine: magnification probe blocked");
    const auto uv = intersect_sensor(out.ray, setup.sensor);
    if (!uv) throw std::runtime_error("engine: magnification probe missed the sensor");
    setup.magnification = std::abs(uv->x) / xt;
  }

  setup.d_tau = setup.f_number > 0.0
                    ? diffraction_diameter(setup.f_number, setup.magnification, setup.wavelength,
                                           cfg.sensor.diffraction_pi_factor)
                    : 0.0;

  // Source points.
  if (cfg.source.type == "dots") {
    DotPattern pattern;
    if (cfg.source.count >= 0) {
      pattern = generate_dot_pattern_count(cfg.source.extent, cfg.source.count, cfg.source.seed,
                                           0.0, cfg.source.dot_diameter);
    } else {
      pattern = generate_dot_pattern(cfg.source.extent, cfg.source.dots_per_region,
                                     setup.magnification, cfg.sensor.pitch, cfg.source.seed, 0.0,
                                     cfg.source.dot_diameter);
    }
    setup.dot_positions = pattern.dots;
    setup.sources.reserve(pattern.dots.size());
    for (const Vec2& d : pattern.dots) setup.sources.push_back({d.x, d.y, pattern.target_plane_z});
  } else {
    const ParticleField particles = generate_particle_field(
        cfg.source.particle_box, cfg.source.particle_count, cfg.source.particle_diameter,
        cfg.source.seed);
    setup.sources = particles.positions;
  }

  // Gain: configured, or calibrated so one reference dot peaks near 90%
  // of full scale.
  if (cfg.sensor.gain > 0.0) {
    setup.sensor.gain = cfg.sensor.gain;
  } else {
    DotHitStats stats;
    Counters counters;
    std::vector<Deposit> deposits;
    deposits.reserve(setup.bundle.rays_per_source);
    process_source(setup, false, kCalibrationSource, {0.0, 0.0, 0.0}, stats, counters, &deposits);
    ImageBuffer scratch(setup.sensor.width_px, setup.sensor.height_px);
    for (const Deposit& d : deposits)
      accumulate_spot(scratch, setup.sensor, d.uv, setup.d_tau, d.energy);
    const double peak = *std::max_element(scratch.data.begin(), scratch.data.end());
    const double full_scale = static_cast<double>((1LL << setup.sensor.bit_depth) - 1);
    setup.sensor.gain = peak > 0.0 ? 0.9 * full_scale / peak : 1.0;
  }

  // Displacement-comparison parameters.
  setup.bos_params = {setup.magnification, cfg.geometry.z_dot_to_volume, cfg.gladstone_dale,
                      setup.ambient_index, depth};
  setup.grid.nx = cfg.bos.grid_nx;
  setup.grid.ny = cfg.bos.grid_ny;
  setup.grid.x0 = -0.5 * cfg.bos.grid_extent.x;
  setup.grid.y0 = -0.5 * cfg.bos.grid_extent.y;
  setup.grid.dx = cfg.bos.grid_extent.x / (cfg.bos.grid_nx - 1);
  setup.grid.dy = cfg.bos.grid_extent.y / (cfg.bos.grid_ny - 1);
  setup.grid.bins_x = cfg.bos.bins_x;
  setup.grid.bins_y = cfg.bos.bins_y;
  setup.grid.min_dots = cfg.bos.min_dots;
  return setup;
}

TraceOutputs run_trace(const SceneSetup& setup, bool with_field, bool accumulate_image,
                       const RunConfig& run) {
  const auto t_start = std::chrono::steady_clock::now();

  const std::size_t n_sources = setup.sources.size();
  const int hw = static_cast<int>(std::thread::hardware_concurrency());
  int threads = run.threads > 0 ? run.threads : std::max(hw, 1);
  threads = std::max(1, std::min<int>(threads, n_sources > 0 ? static_cast<int>(n_sources) : 1));

  TraceOutputs out;
  out.stats.resize(n_sources);
  const bool tiled = accumulate_image && run.deterministic;

  std::vector<Counters> worker_counters(threads);
  std::vector<ImageBuffer> worker_images;
  std::vector<Tile> tiles;
  if (accumulate_image && !tiled)
    worker_images.assign(threads, ImageBuffer(setup.sensor.width_px, setup.sensor.height_px));
  if (tiled) tiles.resize(n_sources);

  auto worker = [&](int w, std::size_t d0, std::size_t d1) {
    std::vector<Deposit> deposits;
    deposits.reserve(setup.bundle.rays_per_source);
    ImageBuffer scratch;
    if (tiled) scratch = ImageBuffer(setup.sensor.width_px, setup.sensor.height_px);
    for (std::size_t d = d0; d < d1; ++d) {
      deposits.clear();
      process_source(setup, with_field, d, setup.sources[d], out.stats[d], worker_counters[w],
                     accumulate_image ? &deposits : nullptr);
      if (!accumulate_image) continue;
      if (tiled) {
        tiles[d] = make_tile(setup, deposits, scratch);
      } else {
        for (const Deposit& dep : deposits)
          accumulate_spot(worker_images[w], setup.sensor, dep.uv, setup.d_tau, dep.energy);
      }
    }
  };

  if (threads == 1) {
    worker(0, 0, n_sources);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int w = 0; w < threads; ++w) {
      const std::size_t d0 = n_sources * w / threads;
      const std::size_t d1 = n_sources * (w + 1) / threads;
      pool.emplace_back(worker, w, d0, d1);
    }
    for (auto& t : pool) t.join();
  }

  if (accumulate_image) {
    out.image = ImageBuffer(setup.sensor.width_px, setup.sensor.height_px);
    if (tiled) {
      for (const Tile& tile : tiles) composite_tile(out.image, tile);
    } else {
      for (const ImageBuffer& img : worker_images) {
        for (std::size_t q = 0; q < out.image.data.size(); ++q) out.image.data[q] += img.data[q];
      }
    }
  }

  RunReport& report = out.report;
  report.threads = threads;
  report.config_hash = setup.config_hash;
  report.emitted = static_cast<long>(n_sources) * setup.bundle.rays_per_source;
  Counters total;
  for (const Counters& c : worker_counters) total += c;
  for (const DotHitStats& s : out.stats) report.landed += s.landed;
  report.lost = total.lost;
  report.blocked_aperture = total.blocked_aperture;
  report.blocked_miss = total.blocked_miss;
  report.blocked_tir = total.blocked_tir;
  report.blocked_sensor_miss = total.sensor_miss;
  report.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return out;
}

RenderResult render(const ExperimentConfig& config) {
  const SceneSetup setup = build_scene_setup(config);
  TraceOutputs traced = run_trace(setup, setup.field != nullptr, true, config.run);

  RenderResult result;
  result.image = std::move(traced.image);
  result.report = traced.report;
  result.gain = setup.sensor.gain;
  result.quantized = quantize(result.image, setup.sensor.bit_depth, setup.sensor.gain);

  if (!config.run.out_dir.empty()) {
    std::filesystem::create_directories(config.run.out_dir);
    const std::filesystem::path out(config.run.out_dir);
    if (config.run.write_images) {
      result.image_path = (out / "image.pgm").string();
      write_pgm16(result.image_path, result.image.width, result.image.height, result.quantized,
                  pgm_comments(setup));
    }
    write_report(result.report, (out / "report.json").string());
  }
  return result;
}

BosRunResult bos_run(const ExperimentConfig& config) {
  if (config.medium.type == "none")
    throw std::runtime_error("bos_run: config must include a density field");
  if (config.source.type != "dots") throw std::runtime_error("bos_run: dot-pattern source required");

  const SceneSetup setup = build_scene_setup(config);
  const bool images = config.run.write_images && !config.run.out_dir.empty();
  TraceOutputs ref = run_trace(setup, false, images, config.run);
  TraceOutputs grad = run_trace(setup, true, images, config.run);

  BosRunResult result;
  result.reference_report = ref.report;
  result.gradient_report = grad.report;
  result.pixel_pitch = setup.sensor.pitch;

  // Dots are attached at the point where their ray cone crosses the
  // volume mid-plane, so measured and predicted fields line up spatially.
  const double shrink = 1.0 - setup.volume_center_z / setup.pupil.center.z;
  std::vector<Vec2> attach(setup.dot_positions.size());
  for (std::size_t d = 0; d < attach.size(); ++d) attach[d] = setup.dot_positions[d] * shrink;

  result.scattered = measure_dot_displacements(attach, ref.stats, grad.stats);
  DisplacementField measured = grid_displacements(result.scattered, setup.grid);

  // Depth-averaged density gradient of the field, per node.
  const GriddedField& field = *setup.field;
  GradientSlice slice;
  slice.nx = field.nx();
  slice.ny = field.ny();
  slice.x0 = field.origin().x;
  slice.y0 = field.origin().y;
  slice.dx = field.spacing().x;
  slice.dy = field.spacing().y;
  slice.grad.resize(static_cast<std::size_t>(slice.nx) * slice.ny);
  for (int j = 0; j < slice.ny; ++j) {
    for (int i = 0; i < slice.nx; ++i) {
      Vec2 g{};
      for (int k = 0; k < field.nz(); ++k) {
        const Vec3 gn = field.node_grad(i, j, k);
        g += Vec2{gn.x, gn.y};
      }
      // Node gradients are of n = K rho + 1; divide K back out.
      slice.grad[slice.index(i, j)] = g / (field.nz() * config.gladstone_dale);
    }
  }
  DisplacementField theory = theoretical_displacement(slice, setup.bos_params, setup.grid);

  const bool px_units = config.bos.units == "px";
  const double unit_scale = px_units ? 1.0 / setup.sensor.pitch : 1.0;
  result.measured = scale_field(std::move(measured), unit_scale);
  result.theoretical = scale_field(std::move(theory), unit_scale);
  result.metrics = compare_fields(result.theoretical, result.measured);

  if (!config.run.out_dir.empty()) {
    std::filesystem::create_directories(config.run.out_dir);
    const std::filesystem::path out(config.run.out_dir);
    write_displacement_csv(result.measured, (out / "measured.csv").string());
    write_displacement_csv(result.theoretical, (out / "theoretical.csv").string());
    write_metrics_csv(result.metrics, (out / "metrics.csv").string(), config.bos.units);
    write_report(result.reference_report, (out / "report_reference.json").string());
    write_report(result.gradient_report, (out / "report_gradient.json").string());
    if (images) {
      const auto q_ref = quantize(ref.image, setup.sensor.bit_depth, setup.sensor.gain);
      const auto q_grad = quantize(grad.image, setup.sensor.bit_depth, setup.sensor.gain);
      write_pgm16((out / "reference.pgm").string(), ref.image.width, ref.image.height, q_ref,
                  pgm_comments(setup));
      write_pgm16((out / "gradient.pgm").string(), grad.image.width, grad.image.height, q_grad,
                  pgm_comments(setup));
    }
  }
  return result;
}

std::vector<TraceDebugRecord> trace_debug(const ExperimentConfig& config, int dot_index,
                                          int ray_index) {
  const SceneSetup setup = build_scene_setup(config);
  if (!setup.field) throw std::runtime_error("trace_debug: config has no density field");
  if (dot_index < 0 || static_cast<std::size_t>(dot_index) >= setup.sources.size())
    throw std::runtime_error("trace_debug: dot index out of range");
  if (ray_index < 0 || ray_index >= setup.bundle.rays_per_source)
    throw std::runtime_error("trace_debug: ray index out of range");

  const auto points =
      sample_aperture_points(setup.pupil, setup.bundle, static_cast<std::uint64_t>(dot_index));
  const auto rays = emit_rays(setup.sources[dot_index], points, setup.wavelength);

  std::vector<TraceDebugRecord> records;
  StepObserver observer = [&records](double xi, const RayState& state) {
    records.push_back({xi, state});
  };
  trace_through_volume(rays[ray_index], *setup.field, setup.step, &observer);
  return records;
}

void write_trace_debug_csv(const std::vector<TraceDebugRecord>& records, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_trace_debug_csv: cannot open " + path);
  out << "xi,x,y,z,tx,ty,tz\n";
  out.precision(15);
  for (const auto& rec : records) {
    out << rec.xi << ',' << rec.state.r.x << ',' << rec.state.r.y << ',' << rec.state.r.z << ','
        << rec.state.t.x << ',' << rec.state.t.y << ',' << rec.state.t.z << '\n';
  }
}

}  // namespace raybos
