// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "raybos/core.hpp"
#include "raybos/raygen.hpp"

namespace raybos {

// Virtual camera sensor. Pixel (col, row) covers
//   u in [(col - W/2) * pitch, (col + 1 - W/2) * pitch)
//   v in [(H/2 - row - 1) * pitch, (H/2 - row) * pitch)
// i.e. row 0 is the top of the image (largest v), matching raster order.
struct SensorModel {
  Vec3 center;
  Vec3 normal;   // unit, facing the incoming rays
  Vec3 e_u;      // in-plane basis, unit
  Vec3 e_v;      // in-plane basis, unit
  int width_px = 0;
  int height_px = 0;
  double pitch = 0.0;        // m
  int bit_depth = 16;        // one of 8, 10, 12, 16
  double gain = 1.0;         // counts per unit radiance
  double window_sigmas = 4.0;  // spot support half-width in sigmas

  void validate() const;  // throws std::invalid_argument
};

// Floating-point accumulation image, radiance units. Entries stay finite
// and non-negative under accumulate_spot.
struct ImageBuffer {
  int width = 0;
  int height = 0;
  std::vector<double> data;  // row-major, row 0 = top

  ImageBuffer() = default;
  ImageBuffer(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0.0) {}

  double& at(int col, int row) { return data[static_cast<std::size_t>(row) * width + col]; }
  double at(int col, int row) const { return data[static_cast<std::size_t>(row) * width + col]; }
};

// Forward line-plane intersection with the sensor, in sensor coordinates
// (u, v) measured from the sensor center in meters. Parallel or backward
// rays miss.
std::optional<Vec2> intersect_sensor(const Ray& ray, const SensorModel& sensor);

// Diffraction-limited spot diameter. The default form carries the pi
// factor as printed; the switch drops it (see README notes on the two
// conventions).
double diffraction_diameter(double f_number, double magnification, double wavelength,
                            bool pi_factor = true);

// Pixel index range a spot touches, clamped to the frame.
struct PixelWindow {
  int c0 = 0, c1 = -1, r0 = 0, r1 = -1;
  bool empty() const { return c1 < c0 || r1 < r0; }
};
PixelWindow spot_pixel_window(const SensorModel& sensor, int width, int height, const Vec2& center,
                              double d_tau);

// Deposits one diffraction spot: a 2-D Gaussian with e^-2 intensity
// diameter d_tau (sigma = d_tau / 4), integrated over each pixel in the
// support window with erf differences. The spot is normalized over its
// window, so an interior spot adds exactly `energy`; off-frame pixels
// drop their share.
void accumulate_spot(ImageBuffer& img, const SensorModel& sensor, const Vec2& center, double d_tau,
                     double energy);

// counts = round(gain * value), clamped to [0, 2^bit_depth - 1].
std::vector<std::uint16_t> quantize(const ImageBuffer& img, int bit_depth, double gain);

}  // namespace raybos
