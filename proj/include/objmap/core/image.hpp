// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace objmap {

template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, T fill = T{})
      : width_(width), height_(height), data_(static_cast<std::size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }

  T& at(int x, int y) { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  const T& at(int x, int y) const { return data_[static_cast<std::size_t>(y) * width_ + x]; }
  bool in_bounds(int x, int y) const { return x >= 0 && x < width_ && y >= 0 && y < height_; }

  std::vector<T>& data() { return data_; }
  const std::vector<T>& data() const { return data_; }

  // Bilinear sample at continuous pixel coordinates (pixel centers at
  // integer coordinates). Caller must keep (x, y) inside [0, w-1] x [0, h-1].
  double bilinear(double x, double y) const {
    int x0 = static_cast<int>(x);
    int y0 = static_cast<int>(y);
    if (x0 > width_ - 2) x0 = width_ - 2;
    if (y0 > height_ - 2) y0 = height_ - 2;
    if (x0 < 0) x0 = 0;
    if (y0 < 0) y0 = 0;
    const double fx = x - x0, fy = y - y0;
    const double v00 = static_cast<double>(at(x0, y0));
    const double v10 = static_cast<double>(at(x0 + 1, y0));
    const double v01 = static_cast<double>(at(x0, y0 + 1));
    const double v11 = static_cast<double>(at(x0 + 1, y0 + 1));
    return (1 - fx) * (1 - fy) * v00 + fx * (1 - fy) * v10 + (1 - fx) * fy * v01 + fx * fy * v11;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using DepthImage = Image<float>;     // metres; 0 or non-finite = invalid
using GrayImage = Image<float>;      // intensity in [0, 1]
using MaskImage = Image<std::uint8_t>;  // instance ids, 0 = background

// 16-bit PGM in millimetres (depth) and 8-bit PGM (intensity / instance ids).
void save_depth_pgm(const std::filesystem::path& path, const DepthImage& img);
DepthImage load_depth_pgm(const std::filesystem::path& path);
void save_gray_pgm(const std::filesystem::path& path, const GrayImage& img);
GrayImage load_gray_pgm(const std::filesystem::path& path);
void save_mask_pgm(const std::filesystem::path& path, const MaskImage& img);
MaskImage load_mask_pgm(const std::filesystem::path& path);

}  // namespace objmap
