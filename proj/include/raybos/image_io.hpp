// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace raybos {

// Binary 16-bit PGM (P5, maxval 65535, big-endian sample bytes).
// Comment lines, if any, are written verbatim after the magic.
void write_pgm16(const std::string& path, int width, int height,
                 std::span<const std::uint16_t> samples,
                 const std::vector<std::string>& comments = {});

struct Pgm16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> samples;
};

Pgm16 read_pgm16(const std::string& path);

// Plain-text PGM (P2) for debugging.
void write_pgm_text(const std::string& path, int width, int height,
                    std::span<const std::uint16_t> samples);

}  // namespace raybos
