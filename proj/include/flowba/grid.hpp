// Copyright 2026 flowba authors
// SPDX-License-Identifier: Apache-2.0

#ifndef FLOWBA_GRID_HPP
#define FLOWBA_GRID_HPP

#include <Eigen/Core>
#include <cassert>
#include <cstdint>
#include <optional>
#include <vector>

namespace flowba {

// Dense row-major W x H raster. (x, y) indexes column x of row y; pixel
// centers sit at integer coordinates, x in [0, W-1], y in [0, H-1].
template <typename T>
class Grid {
 public:
  Grid() = default;
  Grid(int width, int height) : width_(width), height_(height), data_(size_t(width) * height) {}
  Grid(int width, int height, const T& fill)
      : width_(width), height_(height), data_(size_t(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  int64_t size() const { return int64_t(width_) * height_; }
  bool empty() const { return data_.empty(); }

  T& operator()(int x, int y) {
    assert(contains(x, y));
    return data_[size_t(y) * width_ + x];
  }
  const T& operator()(int x, int y) const {
    assert(contains(x, y));
    return data_[size_t(y) * width_ + x];
  }
  T& operator[](int64_t i) { return data_[size_t(i)]; }
  const T& operator[](int64_t i) const { return data_[size_t(i)]; }

  bool contains(int x, int y) const { return x >= 0 && x < width_ && y >= 0 && y < height_; }
  bool same_shape(int w, int h) const { return width_ == w && height_ == h; }

  void fill(const T& v) { std::fill(data_.begin(), data_.end(), v); }

  const std::vector<T>& data() const { return data_; }
  std::vector<T>& data() { return data_; }

  bool operator==(const Grid& other) const {
    return width_ == other.width_ && height_ == other.height_ && data_ == other.data_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using GridF = Grid<double>;
using GridV2 = Grid<Eigen::Vector2d>;
using GridMask = Grid<uint8_t>;

// Bilinear sample at continuous (x, y). Returns nullopt when the footprint
// leaves the raster or touches a pixel flagged invalid (mask == 0). The
// exact-boundary coordinate x == W-1 is handled by shifting the cell left.
inline std::optional<double> sample_bilinear(const GridF& g, double x, double y,
                                             const GridMask* valid = nullptr) {
  const int w = g.width(), h = g.height();
  if (!(x >= 0.0 && x <= double(w - 1) && y >= 0.0 && y <= double(h - 1))) return std::nullopt;
  int x0 = static_cast<int>(x);
  int y0 = static_cast<int>(y);
  if (x0 > w - 2) x0 = w - 2;
  if (y0 > h - 2) y0 = h - 2;
  if (w == 1) x0 = 0;
  if (h == 1) y0 = 0;
  const int x1 = (w == 1) ? 0 : x0 + 1;
  const int y1 = (h == 1) ? 0 : y0 + 1;
  if (valid) {
    if (!(*valid)(x0, y0) || !(*valid)(x1, y0) || !(*valid)(x0, y1) || !(*valid)(x1, y1))
      return std::nullopt;
  }
  const double ax = x - x0, ay = y - y0;
  const double v00 = g(x0, y0), v10 = g(x1, y0), v01 = g(x0, y1), v11 = g(x1, y1);
  return (1 - ax) * (1 - ay) * v00 + ax * (1 - ay) * v10 + (1 - ax) * ay * v01 + ax * ay * v11;
}

}  // namespace flowba

#endif  // FLOWBA_GRID_HPP
