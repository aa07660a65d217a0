#include "objslam/geom/maps.hpp"

#include <Eigen/Geometry>

#include "objslam/core/parallel.hpp"

namespace objslam {

RenderMaps vertex_and_normal_maps(const RgbdFrame& frame,
                                  const Intrinsics& intr) {
  const int w = frame.width();
  const int h = frame.height();
  RenderMaps maps(w, h);

  parallel_for(0, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      const float d = frame.depth.at(x, y);
      if (d <= 0.0f) continue;
      const Vec3 v = intr.unproject({double(x), double(y)}, d);
      maps.vertex.at(x, y) = v.cast<float>();
      if (!frame.intensity.empty()) maps.color.at(x, y) = frame.intensity.at(x, y);

      if (x < 1 || x + 1 >= w || y < 1 || y + 1 >= h) continue;
      const float dl = frame.depth.at(x - 1, y), dr = frame.depth.at(x + 1, y);
      const float du = frame.depth.at(x, y - 1), dd = frame.depth.at(x, y + 1);
      if (dl <= 0.0f || dr <= 0.0f || du <= 0.0f || dd <= 0.0f) continue;

      const Vec3 tx = intr.unproject({double(x + 1), double(y)}, dr) -
                      intr.unproject({double(x - 1), double(y)}, dl);
      const Vec3 ty = intr.unproject({double(x), double(y + 1)}, dd) -
                      intr.unproject({double(x), double(y - 1)}, du);
      Vec3 n = tx.cross(ty);
      const double len = n.norm();
      if (len < 1e-12) continue;
      n /= len;
      if (n.dot(v) > 0.0) n = -n;  // face the camera
      maps.normal.at(x, y) = n.cast<float>();
      maps.label.at(x, y) = kLabelBackground;
    }
  });
  return maps;
}

RenderMaps downsample_maps(const RenderMaps& in) {
  const int w = in.width() / 2;
  const int h = in.height() / 2;
  RenderMaps out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      float color_sum = 0.0f;
      int color_n = 0;
      int best_dx = -1, best_dy = -1;
      for (int dy = 0; dy < 2; ++dy)
        for (int dx = 0; dx < 2; ++dx) {
          if (!in.valid(2 * x + dx, 2 * y + dy)) continue;
          color_sum += in.color.at(2 * x + dx, 2 * y + dy);
          ++color_n;
          if (best_dx < 0) {
            best_dx = dx;
            best_dy = dy;
          }
        }
      if (best_dx < 0) continue;
      const int sx = 2 * x + best_dx, sy = 2 * y + best_dy;
      out.vertex.at(x, y) = in.vertex.at(sx, sy);
      out.normal.at(x, y) = in.normal.at(sx, sy);
      out.label.at(x, y) = in.label.at(sx, sy);
      out.color.at(x, y) = color_sum / static_cast<float>(color_n);
    }
  }
  return out;
}

std::vector<RenderMaps> build_maps_pyramid(const RenderMaps& maps,
                                           int levels) {
  std::vector<RenderMaps> out;
  out.reserve(levels);
  out.push_back(maps);
  for (int l = 1; l < levels; ++l) out.push_back(downsample_maps(out.back()));
  return out;
}

}  // namespace objslam
