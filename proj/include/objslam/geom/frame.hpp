#pragma once

#include <vector>

#include "objslam/core/image.hpp"
#include "objslam/geom/camera.hpp"

namespace objslam {

// Default working depth range in meters; samples outside are invalidated.
constexpr double kDepthMin = 0.1;
constexpr double kDepthMax = 8.0;

// Depth jump treated as a discontinuity when downsampling (meters).
constexpr double kDiscThreshold = 0.07;

// Input RGB-D frame. Depth 0 marks an invalid sample; intensity is the
// cached luma channel in [0, 1].
struct RgbdFrame {
  int id = 0;
  double timestamp = 0.0;
  ColorImage color;
  Image<float> intensity;
  DepthImage depth;

  int width() const { return depth.width(); }
  int height() const { return depth.height(); }
  bool depth_valid(int x, int y) const { return depth.at(x, y) > 0.0f; }
};

float luma(const Vec3f& rgb);

// Builds a frame, caching intensity and zeroing depth outside
// [depth_min, depth_max].
RgbdFrame make_frame(ColorImage color, DepthImage depth, double timestamp = 0.0,
                     int id = 0, double depth_min = kDepthMin,
                     double depth_max = kDepthMax);

// Level 0 is the input; each level halves resolution. Depth is downsampled
// by validity-aware 2x2 averaging that skips samples further than
// disc_threshold from the block reference.
std::vector<RgbdFrame> build_pyramid(const RgbdFrame& frame, int levels,
                                     double disc_threshold = kDiscThreshold);

std::vector<Intrinsics> build_intrinsics_pyramid(const Intrinsics& intr,
                                                 int levels);

}  // namespace objslam
