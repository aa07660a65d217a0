#pragma once

#include "objslam/core/error.hpp"
#include "objslam/geom/pose.hpp"

namespace objslam {

// Pinhole camera. Pixel coordinates are continuous with integer values at
// pixel centers.
struct Intrinsics {
  double fx = 0.0;
  double fy = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  int width = 0;
  int height = 0;

  bool valid() const {
    return fx > 0.0 && fy > 0.0 && cx >= 0.0 && cx < width && cy >= 0.0 &&
           cy < height;
  }

  Vec2 project(const Vec3& p) const {
    return {fx * p.x() / p.z() + cx, fy * p.y() / p.z() + cy};
  }

  Vec3 unproject(const Vec2& pixel, double depth) const {
    if (depth <= 0.0)
      throw Error(ErrorCode::kInvalidDepth, "unproject: depth must be > 0");
    return {(pixel.x() - cx) / fx * depth, (pixel.y() - cy) / fy * depth,
            depth};
  }

  // Intrinsics of the next-coarser pyramid level.
  Intrinsics half() const {
    return {fx * 0.5, fy * 0.5, cx * 0.5, cy * 0.5, width / 2, height / 2};
  }

  bool in_image(const Vec2& pixel, double margin = 0.0) const {
    return pixel.x() >= margin && pixel.x() <= width - 1 - margin &&
           pixel.y() >= margin && pixel.y() <= height - 1 - margin;
  }
};

}  // namespace objslam
