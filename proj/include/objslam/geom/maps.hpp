#pragma once

#include "objslam/core/image.hpp"
#include "objslam/geom/camera.hpp"
#include "objslam/geom/frame.hpp"

namespace objslam {

// Label values for RenderMaps::label.
constexpr std::int32_t kLabelInvalid = -1;
constexpr std::int32_t kLabelBackground = 0;

// Per-pixel model maps: vertices and unit normals in the camera frame,
// scalar color intensity, and the id of the surface that produced each
// pixel (kLabelInvalid where nothing did).
struct RenderMaps {
  Image<Vec3f> vertex;
  Image<Vec3f> normal;
  Image<float> color;
  LabelImage label;

  RenderMaps() = default;
  RenderMaps(int w, int h)
      : vertex(w, h, Vec3f::Zero()),
        normal(w, h, Vec3f::Zero()),
        color(w, h, 0.0f),
        label(w, h, kLabelInvalid) {}

  int width() const { return label.width(); }
  int height() const { return label.height(); }
  bool valid(int x, int y) const { return label.at(x, y) != kLabelInvalid; }
};

// Unprojects the depth image and derives normals from central differences;
// normals are oriented toward the camera. Pixels with an invalid depth
// neighbor get no normal and are marked invalid.
RenderMaps vertex_and_normal_maps(const RgbdFrame& frame,
                                  const Intrinsics& intr);

// Coarser model pyramid level: 2x2 decimation keeping the first valid
// sample for vertex/normal, with valid-aware color averaging.
RenderMaps downsample_maps(const RenderMaps& maps);

std::vector<RenderMaps> build_maps_pyramid(const RenderMaps& maps, int levels);

}  // namespace objslam
