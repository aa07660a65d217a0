#include "objslam/geom/frame.hpp"

#include <cmath>

namespace objslam {

float luma(const Vec3f& rgb) {
  return 0.299f * rgb.x() + 0.587f * rgb.y() + 0.114f * rgb.z();
}

RgbdFrame make_frame(ColorImage color, DepthImage depth, double timestamp,
                     int id, double depth_min, double depth_max) {
  RgbdFrame frame;
  frame.id = id;
  frame.timestamp = timestamp;
  frame.intensity = Image<float>(color.width(), color.height());
  for (int y = 0; y < color.height(); ++y)
    for (int x = 0; x < color.width(); ++x)
      frame.intensity.at(x, y) = luma(color.at(x, y));
  for (int y = 0; y < depth.height(); ++y)
    for (int x = 0; x < depth.width(); ++x) {
      float& d = depth.at(x, y);
      if (!std::isfinite(d) || d < depth_min || d > depth_max) d = 0.0f;
    }
  frame.color = std::move(color);
  frame.depth = std::move(depth);
  return frame;
}

namespace {

RgbdFrame downsample(const RgbdFrame& in, double disc_threshold) {
  const int w = in.width() / 2;
  const int h = in.height() / 2;
  RgbdFrame out;
  out.id = in.id;
  out.timestamp = in.timestamp;
  out.color = ColorImage(w, h);
  out.intensity = Image<float>(w, h);
  out.depth = DepthImage(w, h);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      Vec3f c = Vec3f::Zero();
      float i_sum = 0.0f;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          c += in.color.at(2 * x + dx, 2 * y + dy);
          i_sum += in.intensity.at(2 * x + dx, 2 * y + dy);
        }
      out.color.at(x, y) = 0.25f * c;
      out.intensity.at(x, y) = 0.25f * i_sum;

      // reference = first valid sample; average only samples near it
      float ref = 0.0f;
      for (int dy = 0; dy < 2 && ref <= 0.0f; ++dy)
        for (int dx = 0; dx < 2 && ref <= 0.0f; ++dx)
          ref = in.depth.at(2 * x + dx, 2 * y + dy);
      if (ref <= 0.0f) {
        out.depth.at(x, y) = 0.0f;
        continue;
      }
      float sum = 0.0f;
      int n = 0;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          const float d = in.depth.at(2 * x + dx, 2 * y + dy);
          if (d > 0.0f && std::abs(d - ref) <= disc_threshold) {
            sum += d;
            ++n;
          }
        }
      out.depth.at(x, y) = sum / static_cast<float>(n);
    }
  }
  return out;
}

}  // namespace

std::vector<RgbdFrame> build_pyramid(const RgbdFrame& frame, int levels,
                                     double disc_threshold) {
  if (levels < 1)
    throw Error(ErrorCode::kBadDimensions, "pyramid needs >= 1 level");
  const int div = 1 << (levels - 1);
  if (frame.width() % div != 0 || frame.height() % div != 0)
    throw Error(ErrorCode::kBadDimensions,
                "image size not divisible by 2^(levels-1)");
  std::vector<RgbdFrame> pyramid;
  pyramid.reserve(levels);
  pyramid.push_back(frame);
  for (int l = 1; l < levels; ++l)
    pyramid.push_back(downsample(pyramid.back(), disc_threshold));
  return pyramid;
}

std::vector<Intrinsics> build_intrinsics_pyramid(const Intrinsics& intr,
                                                 int levels) {
  std::vector<Intrinsics> out;
  out.reserve(levels);
  out.push_back(intr);
  for (int l = 1; l < levels; ++l) out.push_back(out.back().half());
  return out;
}

}  // namespace objslam
