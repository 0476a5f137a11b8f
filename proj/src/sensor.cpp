// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#include "raybos/sensor.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace raybos {

void SensorModel::validate() const {
  if (width_px < 1 || height_px < 1)
    throw std::invalid_argument("SensorModel: resolution must be positive");
  if (pitch <= 0.0) throw std::invalid_argument("SensorModel: pixel pitch must be positive");
  if (bit_depth != 8 && bit_depth != 10 && bit_depth != 12 && bit_depth != 16)
    throw std::invalid_argument("SensorModel: bit depth must be one of 8, 10, 12, 16");
  if (gain <= 0.0) throw std::invalid_argument("SensorModel: gain must be positive");
  if (window_sigmas <= 0.0)
    throw std::invalid_argument("SensorModel: spot window must be positive");
  if (std::abs(norm(normal) - 1.0) > 1e-9 || std::abs(norm(e_u) - 1.0) > 1e-9 ||
      std::abs(norm(e_v) - 1.0) > 1e-9)
    throw std::invalid_argument("SensorModel: plane basis must be unit length");
}

std::optional<Vec2> intersect_sensor(const Ray& ray, const SensorModel& sensor) {
  const double denom = dot(ray.dir, sensor.normal);
  if (denom == 0.0) return std::nullopt;
  const double t = dot(sensor.center - ray.origin, sensor.normal) / denom;
  if (t <= 0.0) return std::nullopt;
  const Vec3 p = ray.origin + ray.dir * t;
  return Vec2{dot(p - sensor.center, sensor.e_u), dot(p - sensor.center, sensor.e_v)};
}

double diffraction_diameter(double f_number, double magnification, double wavelength,
                            bool pi_factor) {
  if (f_number <= 0.0 || magnification < 0.0 || wavelength < 0.0)
    throw std::invalid_argument("diffraction_diameter: invalid arguments");
  const double base = 2.44 * f_number * (magnification + 1.0) * wavelength;
  return pi_factor ? std::numbers::pi * base : base;
}

PixelWindow spot_pixel_window(const SensorModel& sensor, int width, int height, const Vec2& center,
                              double d_tau) {
  const double cc = center.x / sensor.pitch + 0.5 * width;
  const double rc = 0.5 * height - center.y / sensor.pitch;
  const double half_width = sensor.window_sigmas * 0.25 * d_tau / sensor.pitch;
  PixelWindow w;
  w.c0 = std::max(static_cast<int>(std::floor(cc - half_width)), 0);
  w.c1 = std::min(static_cast<int>(std::floor(cc + half_width)), width - 1);
  w.r0 = std::max(static_cast<int>(std::floor(rc - half_width)), 0);
  w.r1 = std::min(static_cast<int>(std::floor(rc + half_width)), height - 1);
  return w;
}

void accumulate_spot(ImageBuffer& img, const SensorModel& sensor, const Vec2& center, double d_tau,
                     double energy) {
  if (energy < 0.0) throw std::invalid_argument("accumulate_spot: energy must be >= 0");
  if (energy == 0.0) return;

  const double pitch = sensor.pitch;
  const int w_px = img.width;
  const int h_px = img.height;
  const double sigma = 0.25 * d_tau;  // d_tau is the e^-2 intensity diameter

  // Continuous pixel coordinates of the spot center.
  const double cc = center.x / pitch + 0.5 * w_px;
  const double rc = 0.5 * h_px - center.y / pitch;

  if (sigma < 1e-3 * pitch) {
    // Degenerate spot: all energy in the containing pixel.
    const int col = static_cast<int>(std::floor(cc));
    const int row = static_cast<int>(std::floor(rc));
    if (col >= 0 && col < w_px && row >= 0 && row < h_px) img.at(col, row) += energy;
    return;
  }

  const double half_width = sensor.window_sigmas * sigma / pitch;  // in pixels
  const int c0 = static_cast<int>(std::floor(cc - half_width));
  const int c1 = static_cast<int>(std::floor(cc + half_width));
  const int r0 = static_cast<int>(std::floor(rc - half_width));
  const int r1 = static_cast<int>(std::floor(rc + half_width));

  const double inv_s = 1.0 / (sigma * std::numbers::sqrt2 / pitch);  // pixel units

  constexpr int kStackCap = 128;
  double ubuf[kStackCap], vbuf[kStackCap];
  std::vector<double> uheap, vheap;
  double* wu = ubuf;
  double* wv = vbuf;
  if (c1 - c0 + 1 > kStackCap) {
    uheap.resize(c1 - c0 + 1);
    wu = uheap.data();
  }
  if (r1 - r0 + 1 > kStackCap) {
    vheap.resize(r1 - r0 + 1);
    wv = vheap.data();
  }

  for (int c = c0; c <= c1; ++c)
    wu[c - c0] = 0.5 * (std::erf((c + 1 - cc) * inv_s) - std::erf((c - cc) * inv_s));
  for (int r = r0; r <= r1; ++r)
    wv[r - r0] = 0.5 * (std::erf((r + 1 - rc) * inv_s) - std::erf((r - rc) * inv_s));

  // Normalize over the whole support window (including any off-frame part)
  // so interior spots conserve energy exactly and clipped spots keep only
  // their in-frame share.
  const double mass_u = 0.5 * (std::erf((c1 + 1 - cc) * inv_s) - std::erf((c0 - cc) * inv_s));
  const double mass_v = 0.5 * (std::erf((r1 + 1 - rc) * inv_s) - std::erf((r0 - rc) * inv_s));
  const double scale = energy / (mass_u * mass_v);

  const int cb = std::max(c0, 0);
  const int ce = std::min(c1, w_px - 1);
  const int rb = std::max(r0, 0);
  const int re = std::min(r1, h_px - 1);
  for (int r = rb; r <= re; ++r) {
    const double row_w = wv[r - r0] * scale;
    double* row_data = &img.at(cb, r);
    for (int c = cb; c <= ce; ++c) row_data[c - cb] += wu[c - c0] * row_w;
  }
}

std::vector<std::uint16_t> quantize(const ImageBuffer& img, int bit_depth, double gain) {
  if (bit_depth != 8 && bit_depth != 10 && bit_depth != 12 && bit_depth != 16)
    throw std::invalid_argument("quantize: bit depth must be one of 8, 10, 12, 16");
  if (gain <= 0.0) throw std::invalid_argument("quantize: gain must be positive");
  const long long max_count = (1LL << bit_depth) - 1;
  std::vector<std::uint16_t> out(img.data.size());
  for (std::size_t q = 0; q < img.data.size(); ++q) {
    const long long counts = std::llround(gain * img.data[q]);
    out[q] = static_cast<std::uint16_t>(std::clamp(counts, 0LL, max_count));
  }
  return out;
}

}  // namespace raybos
