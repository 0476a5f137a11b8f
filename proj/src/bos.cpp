// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#include "raybos/bos.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace raybos {

void DisplacementField::validate() const {
  if (nx < 1 || ny < 1) throw std::invalid_argument("DisplacementField: empty grid");
  if (dx <= 0.0 || dy <= 0.0)
    throw std::invalid_argument("DisplacementField: node spacing must be strictly positive");
  if (delta.size() != static_cast<std::size_t>(nx) * ny || mask.size() != delta.size())
    throw std::invalid_argument("DisplacementField: storage does not match dims");
}

void BosParams::validate() const {
  if (magnification <= 0.0 || z_d <= 0.0 || gladstone_dale <= 0.0 || ambient_index <= 0.0 ||
      depth <= 0.0)
    throw std::invalid_argument("BosParams: all parameters must be positive");
}

std::optional<Vec2> GradientSlice::sample(double x, double y) const {
  const double qx = (x - x0) / dx;
  const double qy = (y - y0) / dy;
  if (qx < 0.0 || qx > nx - 1 || qy < 0.0 || qy > ny - 1) return std::nullopt;
  const int i = std::min(static_cast<int>(qx), nx - 2);
  const int j = std::min(static_cast<int>(qy), ny - 2);
  const double fx = qx - i;
  const double fy = qy - j;
  const Vec2 g00 = grad[index(i, j)];
  const Vec2 g10 = grad[index(i + 1, j)];
  const Vec2 g01 = grad[index(i, j + 1)];
  const Vec2 g11 = grad[index(i + 1, j + 1)];
  return g00 * ((1 - fx) * (1 - fy)) + g10 * (fx * (1 - fy)) + g01 * ((1 - fx) * fy) +
         g11 * (fx * fy);
}

namespace {

double displacement_factor(const BosParams& p) {
  return p.magnification * p.z_d * p.gladstone_dale * p.depth / p.ambient_index;
}

}  // namespace

DisplacementField theoretical_displacement(const GradientSlice& grad_rho, const BosParams& params) {
  params.validate();
  const double factor = displacement_factor(params);
  DisplacementField field;
  field.nx = grad_rho.nx;
  field.ny = grad_rho.ny;
  field.x0 = grad_rho.x0;
  field.y0 = grad_rho.y0;
  field.dx = grad_rho.dx;
  field.dy = grad_rho.dy;
  field.delta.resize(grad_rho.grad.size());
  field.mask.assign(grad_rho.grad.size(), 1);
  for (std::size_t q = 0; q < grad_rho.grad.size(); ++q) {
    if (!std::isfinite(grad_rho.grad[q].x) || !std::isfinite(grad_rho.grad[q].y))
      throw std::invalid_argument("theoretical_displacement: gradient field must be finite");
    field.delta[q] = grad_rho.grad[q] * factor;
  }
  field.validate();
  return field;
}

DisplacementField theoretical_displacement(const GradientSlice& grad_rho, const BosParams& params,
                                           const GridSpec& grid) {
  params.validate();
  const double factor = displacement_factor(params);
  DisplacementField field;
  field.nx = grid.nx;
  field.ny = grid.ny;
  field.x0 = grid.x0;
  field.y0 = grid.y0;
  field.dx = grid.dx;
  field.dy = grid.dy;
  field.delta.assign(static_cast<std::size_t>(grid.nx) * grid.ny, Vec2{});
  field.mask.assign(field.delta.size(), 0);
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const auto g = grad_rho.sample(field.node_x(i), field.node_y(j));
      if (!g) continue;
      field.delta[field.index(i, j)] = *g * factor;
      field.mask[field.index(i, j)] = 1;
    }
  }
  field.validate();
  return field;
}

std::vector<ScatteredDisplacement> measure_dot_displacements(std::span<const Vec2> positions,
                                                             std::span<const DotHitStats> reference,
                                                             std::span<const DotHitStats> gradient) {
  if (positions.size() != reference.size() || positions.size() != gradient.size())
    throw std::invalid_argument("measure_dot_displacements: size mismatch");
  std::vector<ScatteredDisplacement> out(positions.size());
  for (std::size_t d = 0; d < positions.size(); ++d) {
    out[d].position = positions[d];
    if (reference[d].landed == 0 || gradient[d].landed == 0) continue;  // masked
    const Vec2 mean_ref = reference[d].hit_sum / static_cast<double>(reference[d].landed);
    const Vec2 mean_grad = gradient[d].hit_sum / static_cast<double>(gradient[d].landed);
    out[d].delta = mean_grad - mean_ref;
    out[d].valid = true;
  }
  return out;
}

DisplacementField grid_displacements(std::span<const ScatteredDisplacement> scattered,
                                     const GridSpec& grid) {
  if (grid.nx < 2 || grid.ny < 2 || grid.dx <= 0.0 || grid.dy <= 0.0)
    throw std::invalid_argument("grid_displacements: invalid grid spec");

  long valid_count = 0;
  for (const auto& s : scattered)
    if (s.valid) ++valid_count;
  if (valid_count < grid.min_dots)
    throw std::runtime_error("grid_displacements: too few valid dots (" +
                             std::to_string(valid_count) + " < " + std::to_string(grid.min_dots) +
                             ")");

  const int bx = grid.bins_x > 0 ? grid.bins_x : grid.nx;
  const int by = grid.bins_y > 0 ? grid.bins_y : grid.ny;
  const double ext_x = (grid.nx - 1) * grid.dx;
  const double ext_y = (grid.ny - 1) * grid.dy;
  const double cell_w = ext_x / bx;
  const double cell_h = ext_y / by;

  std::vector<Vec2> cell_sum(static_cast<std::size_t>(bx) * by);
  std::vector<long> cell_count(cell_sum.size(), 0);
  for (const auto& s : scattered) {
    if (!s.valid) continue;
    const double fx = (s.position.x - grid.x0) / cell_w;
    const double fy = (s.position.y - grid.y0) / cell_h;
    if (fx < 0.0 || fy < 0.0) continue;
    const int cx = static_cast<int>(fx);
    const int cy = static_cast<int>(fy);
    if (cx >= bx || cy >= by) continue;  // dots outside the grid extent are ignored
    const std::size_t q = static_cast<std::size_t>(cy) * bx + cx;
    cell_sum[q] += s.delta;
    ++cell_count[q];
  }

  auto cell_valid = [&](int cx, int cy) {
    return cx >= 0 && cx < bx && cy >= 0 && cy < by &&
           cell_count[static_cast<std::size_t>(cy) * bx + cx] > 0;
  };
  auto cell_mean = [&](int cx, int cy) {
    const std::size_t q = static_cast<std::size_t>(cy) * bx + cx;
    return cell_sum[q] / static_cast<double>(cell_count[q]);
  };

  DisplacementField field;
  field.nx = grid.nx;
  field.ny = grid.ny;
  field.x0 = grid.x0;
  field.y0 = grid.y0;
  field.dx = grid.dx;
  field.dy = grid.dy;
  field.delta.assign(static_cast<std::size_t>(grid.nx) * grid.ny, Vec2{});
  field.mask.assign(field.delta.size(), 0);

  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      const double x = field.node_x(i);
      const double y = field.node_y(j);
      // Position in cell-center coordinates.
      const double gx = (x - grid.x0) / cell_w - 0.5;
      const double gy = (y - grid.y0) / cell_h - 0.5;
      const int cx = static_cast<int>(std::floor(gx));
      const int cy = static_cast<int>(std::floor(gy));
      const double fx = gx - cx;
      const double fy = gy - cy;

      if (cell_valid(cx, cy) && cell_valid(cx + 1, cy) && cell_valid(cx, cy + 1) &&
          cell_valid(cx + 1, cy + 1)) {
        field.delta[field.index(i, j)] = cell_mean(cx, cy) * ((1 - fx) * (1 - fy)) +
                                         cell_mean(cx + 1, cy) * (fx * (1 - fy)) +
                                         cell_mean(cx, cy + 1) * ((1 - fx) * fy) +
                                         cell_mean(cx + 1, cy + 1) * (fx * fy);
        field.mask[field.index(i, j)] = 1;
        continue;
      }
      // Fall back to the containing cell when full bilinear support is
      // missing (edges, sparse data).
      const int hx = std::min(static_cast<int>((x - grid.x0) / cell_w), bx - 1);
      const int hy = std::min(static_cast<int>((y - grid.y0) / cell_h), by - 1);
      if (cell_valid(hx, hy)) {
        field.delta[field.index(i, j)] = cell_mean(hx, hy);
        field.mask[field.index(i, j)] = 1;
      }
    }
  }
  field.validate();
  return field;
}

FieldMetrics compare_fields(const DisplacementField& a, const DisplacementField& b) {
  a.validate();
  b.validate();
  const bool same_grid = a.nx == b.nx && a.ny == b.ny && std::abs(a.x0 - b.x0) < 1e-12 &&
                         std::abs(a.y0 - b.y0) < 1e-12 && std::abs(a.dx - b.dx) < 1e-12 &&
                         std::abs(a.dy - b.dy) < 1e-12;
  if (!same_grid) throw std::invalid_argument("compare_fields: fields are on different grids");

  FieldMetrics m;
  double sum_sq = 0.0;
  double sum_a = 0.0, sum_b = 0.0, sum_aa = 0.0, sum_bb = 0.0, sum_ab = 0.0;
  long comp = 0;
  for (std::size_t q = 0; q < a.delta.size(); ++q) {
    if (!a.mask[q] || !b.mask[q]) continue;
    ++m.nodes;
    m.peak_a = std::max(m.peak_a, norm(a.delta[q]));
    m.peak_b = std::max(m.peak_b, norm(b.delta[q]));
    const double av[2] = {a.delta[q].x, a.delta[q].y};
    const double bv[2] = {b.delta[q].x, b.delta[q].y};
    for (int c = 0; c < 2; ++c) {
      const double diff = av[c] - bv[c];
      sum_sq += diff * diff;
      m.peak_abs_error = std::max(m.peak_abs_error, std::abs(diff));
      sum_a += av[c];
      sum_b += bv[c];
      sum_aa += av[c] * av[c];
      sum_bb += bv[c] * bv[c];
      sum_ab += av[c] * bv[c];
      ++comp;
    }
  }
  if (m.nodes == 0) throw std::runtime_error("compare_fields: joint mask is empty");

  const double n = static_cast<double>(comp);
  m.rms_error = std::sqrt(sum_sq / n);
  const double cov = sum_ab - sum_a * sum_b / n;
  const double var_a = sum_aa - sum_a * sum_a / n;
  const double var_b = sum_bb - sum_b * sum_b / n;
  m.pearson_correlation =
      (var_a > 0.0 && var_b > 0.0) ? cov / std::sqrt(var_a * var_b) : (sum_sq == 0.0 ? 1.0 : 0.0);
  return m;
}

void write_displacement_csv(const DisplacementField& field, const std::string& path) {
  field.validate();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_displacement_csv: cannot open " + path);
  out << "x,y,dx,dy,mask\n";
  out.precision(12);
  for (int j = 0; j < field.ny; ++j) {
    for (int i = 0; i < field.nx; ++i) {
      const std::size_t q = field.index(i, j);
      out << field.node_x(i) << ',' << field.node_y(j) << ',' << field.delta[q].x << ','
          << field.delta[q].y << ',' << static_cast<int>(field.mask[q]) << '\n';
    }
  }
}

void write_metrics_csv(const FieldMetrics& metrics, const std::string& path,
                       const std::string& unit) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_metrics_csv: cannot open " + path);
  out.precision(12);
  out << "rms_error,peak_abs_error,pearson_correlation,peak_a,peak_b,nodes,unit\n";
  out << metrics.rms_error << ',' << metrics.peak_abs_error << ',' << metrics.pearson_correlation
      << ',' << metrics.peak_a << ',' << metrics.peak_b << ',' << metrics.nodes << ',' << unit
      << '\n';
}

}  // namespace raybos
