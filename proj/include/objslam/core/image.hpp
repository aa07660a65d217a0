#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Core>

#include "objslam/core/error.hpp"

namespace objslam {

using Vec3f = Eigen::Vector3f;

// Dense row-major 2D buffer. Pixel (x, y) with x along the width.
template <typename T>
class Image {
 public:
  Image() = default;
  Image(int width, int height, const T& fill = T{})
      : width_(width), height_(height),
        data_(static_cast<size_t>(width) * height, fill) {}

  int width() const { return width_; }
  int height() const { return height_; }
  bool empty() const { return data_.empty(); }
  size_t size() const { return data_.size(); }

  bool in_bounds(int x, int y) const {
    return x >= 0 && x < width_ && y >= 0 && y < height_;
  }
  bool same_size(int w, int h) const { return width_ == w && height_ == h; }
  template <typename U>
  bool same_size(const Image<U>& other) const {
    return same_size(other.width(), other.height());
  }

  T& at(int x, int y) { return data_[static_cast<size_t>(y) * width_ + x]; }
  const T& at(int x, int y) const {
    return data_[static_cast<size_t>(y) * width_ + x];
  }

  void fill(const T& v) { std::fill(data_.begin(), data_.end(), v); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  bool operator==(const Image& other) const {
    return width_ == other.width_ && height_ == other.height_ &&
           data_ == other.data_;
  }

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

using MaskImage = Image<std::uint8_t>;
using DepthImage = Image<float>;
using ColorImage = Image<Vec3f>;
using LabelImage = Image<std::int32_t>;

inline int mask_area(const MaskImage& m) {
  int n = 0;
  for (int y = 0; y < m.height(); ++y)
    for (int x = 0; x < m.width(); ++x)
      if (m.at(x, y)) ++n;
  return n;
}

inline void require_same_size(const MaskImage& a, const MaskImage& b) {
  if (!a.same_size(b))
    throw Error(ErrorCode::kDimensionMismatch, "mask dimensions differ");
}

}  // namespace objslam
