#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "demoforge/error.hpp"

namespace demoforge {

/// Interleaved RGB, 8 bits per channel, row-major.
class Image {
 public:
  Image() = default;
  Image(int width, int height, std::uint8_t fill = 0)
      : width_(width), height_(height), data_(checked_size(width, height) * 3, fill) {}
  Image(int width, int height, std::vector<std::uint8_t> data) : width_(width), height_(height), data_(std::move(data)) {
    if (data_.size() != checked_size(width, height) * 3) fail(ErrorCode::DimMismatch, "RGB buffer size mismatch");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  std::size_t pixel_count() const { return static_cast<std::size_t>(width_) * static_cast<std::size_t>(height_); }

  std::uint8_t* pixel(int x, int y) { return data_.data() + offset(x, y); }
  const std::uint8_t* pixel(int x, int y) const { return data_.data() + offset(x, y); }

  std::uint8_t& at(int x, int y, int c) { return data_[offset(x, y) + static_cast<std::size_t>(c)]; }
  std::uint8_t at(int x, int y, int c) const { return data_[offset(x, y) + static_cast<std::size_t>(c)]; }

  void set(int x, int y, std::uint8_t r, std::uint8_t g, std::uint8_t b) {
    std::uint8_t* p = pixel(x, y);
    p[0] = r;
    p[1] = g;
    p[2] = b;
  }

  const std::vector<std::uint8_t>& data() const { return data_; }
  std::vector<std::uint8_t>& data() { return data_; }

  friend bool operator==(const Image&, const Image&) = default;

 private:
  static std::size_t checked_size(int w, int h) {
    if (w < 0 || h < 0) fail(ErrorCode::DimMismatch, "negative raster dimensions");
    return static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  }
  std::size_t offset(int x, int y) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) * 3;
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> data_;
};

/// Binary raster; each cell holds 0 or 1.
class Mask {
 public:
  Mask() = default;
  Mask(int width, int height, bool fill = false)
      : width_(width), height_(height), bits_(static_cast<std::size_t>(std::max(width, 0)) * std::max(height, 0), fill ? 1 : 0) {
    if (width < 0 || height < 0) fail(ErrorCode::DimMismatch, "negative raster dimensions");
  }

  int width() const { return width_; }
  int height() const { return height_; }
  std::size_t size() const { return bits_.size(); }

  bool get(int x, int y) const { return bits_[index(x, y)] != 0; }
  void set(int x, int y, bool v = true) { bits_[index(x, y)] = v ? 1 : 0; }
  bool operator[](std::size_t i) const { return bits_[i] != 0; }
  void set_index(std::size_t i, bool v) { bits_[i] = v ? 1 : 0; }

  std::size_t count() const { return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1})); }
  bool none() const { return count() == 0; }
  bool all() const { return count() == bits_.size(); }

  const std::vector<std::uint8_t>& bits() const { return bits_; }

  friend bool operator==(const Mask&, const Mask&) = default;

 private:
  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
  }

  int width_ = 0;
  int height_ = 0;
  std::vector<std::uint8_t> bits_;
};

template <class A, class B>
bool same_dims(const A& a, const B& b) {
  return a.width() == b.width() && a.height() == b.height();
}

template <class A, class B>
void require_same_dims(const A& a, const B& b, const std::string& what) {
  if (!same_dims(a, b))
    fail(ErrorCode::DimMismatch, what + ": " + std::to_string(a.width()) + "x" + std::to_string(a.height()) + " vs " +
                                     std::to_string(b.width()) + "x" + std::to_string(b.height()));
}

namespace detail {
template <class Op>
Mask combine(const Mask& a, const Mask& b, Op op) {
  require_same_dims(a, b, "mask combine");
  Mask out(a.width(), a.height());
  for (std::size_t i = 0; i < a.size(); ++i) out.set_index(i, op(a[i], b[i]));
  return out;
}
}  // namespace detail

inline Mask mask_union(const Mask& a, const Mask& b) {
  return detail::combine(a, b, [](bool x, bool y) { return x || y; });
}
inline Mask mask_intersection(const Mask& a, const Mask& b) {
  return detail::combine(a, b, [](bool x, bool y) { return x && y; });
}
/// a \ b
inline Mask mask_difference(const Mask& a, const Mask& b) {
  return detail::combine(a, b, [](bool x, bool y) { return x && !y; });
}

/// Dilation by a (2r+1)x(2r+1) square, i.e. every pixel within Chebyshev
/// distance r of a set pixel becomes set. Separable: rows then columns.
inline Mask dilate(const Mask& m, int radius) {
  if (radius < 0) fail(ErrorCode::OutOfRange, "negative dilation radius");
  if (radius == 0) return m;
  const int w = m.width();
  const int h = m.height();
  Mask rows(w, h);
  for (int y = 0; y < h; ++y) {
    int last = -(radius + 1) * 4;  // x of most recent set pixel at or left of x + radius
    for (int x = -radius; x < w; ++x) {
      const int probe = x + radius;
      if (probe < w && m.get(probe, y)) last = probe;
      if (x >= 0 && last >= x - radius) rows.set(x, y);
    }
  }
  Mask out(w, h);
  for (int x = 0; x < w; ++x) {
    int last = -(radius + 1) * 4;
    for (int y = -radius; y < h; ++y) {
      const int probe = y + radius;
      if (probe < h && rows.get(x, probe)) last = probe;
      if (y >= 0 && last >= y - radius) out.set(x, y);
    }
  }
  return out;
}

}  // namespace demoforge
