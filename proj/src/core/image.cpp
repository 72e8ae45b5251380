// SPDX-License-Identifier: Apache-2.0

#include "objmap/core/image.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "objmap/core/errors.hpp"

namespace objmap {

namespace {

void write_header(std::ostream& out, int width, int height, int maxval) {
  out << "P5\n" << width << " " << height << "\n" << maxval << "\n";
}

struct PgmHeader {
  int width = 0, height = 0, maxval = 0;
};

PgmHeader read_header(std::istream& in, const std::filesystem::path& path) {
  std::string magic;
  in >> magic;
  if (magic != "P5") throw ValidationError("not a binary PGM: " + path.string());
  PgmHeader h;
  // PGM allows '#' comment lines between tokens.
  auto next_int = [&in]() {
    int c = in.peek();
    while (c == ' ' || c == '\n' || c == '\r' || c == '\t' || c == '#') {
      if (c == '#') {
        std::string line;
        std::getline(in, line);
      } else {
        in.get();
      }
      c = in.peek();
    }
    int v = 0;
    in >> v;
    return v;
  };
  h.width = next_int();
  h.height = next_int();
  h.maxval = next_int();
  in.get();  // single whitespace before raster
  if (h.width <= 0 || h.height <= 0) throw ValidationError("bad PGM dimensions: " + path.string());
  return h;
}

}  // namespace

void save_depth_pgm(const std::filesystem::path& path, const DepthImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  write_header(out, img.width(), img.height(), 65535);
  std::vector<unsigned char> row(static_cast<std::size_t>(img.width()) * 2);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const float d = img.at(x, y);
      unsigned mm = 0;
      if (std::isfinite(d) && d > 0) {
        const double v = std::lround(d * 1000.0);
        mm = static_cast<unsigned>(v < 0 ? 0 : (v > 65535 ? 65535 : v));
      }
      row[2 * x] = static_cast<unsigned char>(mm >> 8);
      row[2 * x + 1] = static_cast<unsigned char>(mm & 0xff);
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
}

DepthImage load_depth_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  const PgmHeader h = read_header(in, path);
  if (h.maxval != 65535) throw ValidationError("depth PGM must be 16-bit: " + path.string());
  DepthImage img(h.width, h.height, 0.f);
  std::vector<unsigned char> row(static_cast<std::size_t>(h.width) * 2);
  for (int y = 0; y < h.height; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    for (int x = 0; x < h.width; ++x) {
      const unsigned mm = (static_cast<unsigned>(row[2 * x]) << 8) | row[2 * x + 1];
      img.at(x, y) = mm == 0 ? 0.f : static_cast<float>(mm) * 1e-3f;
    }
  }
  if (!in) throw ValidationError("truncated PGM: " + path.string());
  return img;
}

void save_gray_pgm(const std::filesystem::path& path, const GrayImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  write_header(out, img.width(), img.height(), 255);
  std::vector<unsigned char> row(static_cast<std::size_t>(img.width()));
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double v = std::clamp(static_cast<double>(img.at(x, y)), 0.0, 1.0);
      row[x] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
  }
}

GrayImage load_gray_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  const PgmHeader h = read_header(in, path);
  if (h.maxval != 255) throw ValidationError("intensity PGM must be 8-bit: " + path.string());
  GrayImage img(h.width, h.height, 0.f);
  std::vector<unsigned char> row(static_cast<std::size_t>(h.width));
  for (int y = 0; y < h.height; ++y) {
    in.read(reinterpret_cast<char*>(row.data()), static_cast<std::streamsize>(row.size()));
    for (int x = 0; x < h.width; ++x) img.at(x, y) = static_cast<float>(row[x]) / 255.f;
  }
  if (!in) throw ValidationError("truncated PGM: " + path.string());
  return img;
}

void save_mask_pgm(const std::filesystem::path& path, const MaskImage& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ValidationError("cannot write " + path.string());
  write_header(out, img.width(), img.height(), 255);
  for (int y = 0; y < img.height(); ++y)
    out.write(reinterpret_cast<const char*>(&img.at(0, y)), img.width());
}

MaskImage load_mask_pgm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read " + path.string());
  const PgmHeader h = read_header(in, path);
  if (h.maxval != 255) throw ValidationError("mask PGM must be 8-bit: " + path.string());
  MaskImage img(h.width, h.height, 0);
  for (int y = 0; y < h.height; ++y)
    in.read(reinterpret_cast<char*>(&img.at(0, y)), h.width);
  if (!in) throw ValidationError("truncated PGM: " + path.string());
  return img;
}

}  // namespace objmap
