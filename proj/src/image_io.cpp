// Copyright (c) 2026, raybos contributors.
// SPDX-License-Identifier: Apache-2.0

#include "raybos/image_io.hpp"

#include <fstream>
#include <stdexcept>

namespace raybos {

void write_pgm16(const std::string& path, int width, int height,
                 std::span<const std::uint16_t> samples, const std::vector<std::string>& comments) {
  if (samples.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("write_pgm16: sample count does not match dimensions");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("write_pgm16: cannot open " + path);
  out << "P5\n";
  for (const std::string& c : comments) out << "# " << c << "\n";
  out << width << " " << height << "\n65535\n";
  std::vector<unsigned char> bytes(samples.size() * 2);
  for (std::size_t q = 0; q < samples.size(); ++q) {
    bytes[2 * q] = static_cast<unsigned char>(samples[q] >> 8);  // big-endian per PGM spec
    bytes[2 * q + 1] = static_cast<unsigned char>(samples[q] & 0xff);
  }
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("write_pgm16: write failed for " + path);
}

Pgm16 read_pgm16(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("read_pgm16: cannot open " + path);
  std::string magic;
  in >> magic;
  if (magic != "P5") throw std::runtime_error("read_pgm16: not a binary PGM: " + path);

  auto next_token = [&in, &path]() {
    std::string tok;
    while (in >> tok) {
      if (tok[0] == '#') {
        std::string rest;
        std::getline(in, rest);
        continue;
      }
      return tok;
    }
    throw std::runtime_error("read_pgm16: truncated header in " + path);
  };

  Pgm16 img;
  img.width = std::stoi(next_token());
  img.height = std::stoi(next_token());
  const int maxval = std::stoi(next_token());
  if (maxval != 65535) throw std::runtime_error("read_pgm16: expected 16-bit maxval in " + path);
  in.get();  // single whitespace after maxval

  const std::size_t count = static_cast<std::size_t>(img.width) * img.height;
  std::vector<unsigned char> bytes(count * 2);
  in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (static_cast<std::size_t>(in.gcount()) != bytes.size())
    throw std::runtime_error("read_pgm16: truncated data in " + path);
  img.samples.resize(count);
  for (std::size_t q = 0; q < count; ++q)
    img.samples[q] = static_cast<std::uint16_t>((bytes[2 * q] << 8) | bytes[2 * q + 1]);
  return img;
}

void write_pgm_text(const std::string& path, int width, int height,
                    std::span<const std::uint16_t> samples) {
  if (samples.size() != static_cast<std::size_t>(width) * height)
    throw std::invalid_argument("write_pgm_text: sample count does not match dimensions");
  std::ofstream out(path);
  if (!out) throw std::runtime_error("write_pgm_text: cannot open " + path);
  out << "P2\n" << width << " " << height << "\n65535\n";
  for (int r = 0; r < height; ++r) {
    for (int c = 0; c < width; ++c) {
      out << samples[static_cast<std::size_t>(r) * width + c] << (c + 1 == width ? '\n' : ' ');
    }
  }
}

}  // namespace raybos
