#include "objslam/volume/tsdf_volume.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <unordered_set>

#include "objslam/core/parallel.hpp"

namespace objslam {

namespace {

inline Eigen::Vector3i floor_div(const Vec3& p, double cell) {
  return {static_cast<int>(std::floor(p.x() / cell)),
          static_cast<int>(std::floor(p.y() / cell)),
          static_cast<int>(std::floor(p.z() / cell))};
}

// Visits every block cell intersected by the segment [a, b] (volume frame).
template <typename Fn>
void walk_blocks(const Vec3& a, const Vec3& b, double extent, Fn&& fn) {
  const Vec3 d = b - a;
  const double len = d.norm();
  Eigen::Vector3i cell = floor_div(a, extent);
  const Eigen::Vector3i last = floor_div(b, extent);
  fn(cell);
  if (len < 1e-12) return;
  const Vec3 dir = d / len;

  Eigen::Vector3i step;
  Vec3 t_max, t_delta;
  for (int i = 0; i < 3; ++i) {
    if (dir[i] > 1e-12) {
      step[i] = 1;
      t_max[i] = ((cell[i] + 1) * extent - a[i]) / dir[i];
      t_delta[i] = extent / dir[i];
    } else if (dir[i] < -1e-12) {
      step[i] = -1;
      t_max[i] = (cell[i] * extent - a[i]) / dir[i];
      t_delta[i] = -extent / dir[i];
    } else {
      step[i] = 0;
      t_max[i] = std::numeric_limits<double>::infinity();
      t_delta[i] = std::numeric_limits<double>::infinity();
    }
  }
  int guard = 0;
  while (cell != last && guard++ < 4096) {
    int axis = 0;
    if (t_max[1] < t_max[axis]) axis = 1;
    if (t_max[2] < t_max[axis]) axis = 2;
    if (t_max[axis] > len) break;
    cell[axis] += step[axis];
    t_max[axis] += t_delta[axis];
    fn(cell);
  }
}

}  // namespace

ScalableTsdfVolume::ScalableTsdfVolume(double voxel_length, double trunc_dist)
    : voxel_length_(voxel_length),
      trunc_dist_(trunc_dist > 0.0 ? trunc_dist : 5.0 * voxel_length) {
  if (voxel_length_ <= 0.0)
    throw Error(ErrorCode::kInvalidArgument, "voxel_length must be > 0");
  if (trunc_dist_ < 2.0 * voxel_length_)
    throw Error(ErrorCode::kInvalidArgument,
                "trunc_dist must be >= 2 * voxel_length");
}

Eigen::Vector3i ScalableTsdfVolume::block_of(const Vec3& p_vol) const {
  return floor_div(p_vol, block_extent());
}

const Voxel* ScalableTsdfVolume::voxel_at(const Vec3& p_vol) const {
  const Eigen::Vector3i g = floor_div(p_vol, voxel_length_);
  const Eigen::Vector3i b(g.x() >> 4, g.y() >> 4, g.z() >> 4);
  auto it = blocks_.find(b);
  if (it == blocks_.end()) return nullptr;
  return &it->second.at(g.x() - b.x() * VoxelBlock::kSize,
                        g.y() - b.y() * VoxelBlock::kSize,
                        g.z() - b.z() * VoxelBlock::kSize);
}

void ScalableTsdfVolume::require_active(const char* op) const {
  if (!active_)
    throw Error(ErrorCode::kVolumeOffloaded,
                std::string(op) + ": volume is offloaded");
}

void ScalableTsdfVolume::integrate(const RgbdFrame& frame,
                                   const MaskImage& mask,
                                   const Pose& cam_in_vol,
                                   const Intrinsics& intr,
                                   IntegrationMode mode) {
  require_active("integrate");
  if (!mask.same_size(frame.depth))
    throw Error(ErrorCode::kDimensionMismatch,
                "integrate: mask does not match frame");

  // Allocate blocks along the truncation band of every masked ray.
  const Vec3 origin = cam_in_vol.translation();
  std::unordered_set<Eigen::Vector3i, BlockHash> touched;
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      if (!mask.at(x, y)) continue;
      const float d = frame.depth.at(x, y);
      if (d <= 0.0f) continue;
      const Vec3 p_cam = intr.unproject({double(x), double(y)}, d);
      const Vec3 p_vol = cam_in_vol * p_cam;
      const Vec3 dir = (p_vol - origin).normalized();
      // cover z in [d - trunc, d + trunc] along the ray
      const double scale = (p_vol - origin).norm() / d;
      const Vec3 a = p_vol - dir * trunc_dist_ * scale;
      const Vec3 b = p_vol + dir * trunc_dist_ * scale;
      walk_blocks(a, b, block_extent(), [&](const Eigen::Vector3i& c) {
        touched.insert(c);
      });
    }
  }
  std::vector<VoxelBlock*> update_set;
  update_set.reserve(touched.size());
  for (const auto& c : touched) {
    auto [it, inserted] = blocks_.try_emplace(c);
    if (inserted) it->second.coord = c;
    update_set.push_back(&it->second);
  }

  // Fuse per block; write sets are disjoint.
  const Pose vol_to_cam = cam_in_vol.inverse();
  const float inv_trunc = static_cast<float>(1.0 / trunc_dist_);
  parallel_chunks(0, static_cast<int>(update_set.size()), 1, [&](int b0,
                                                                 int b1) {
    for (int bi = b0; bi < b1; ++bi) {
      VoxelBlock& block = *update_set[bi];
      const Vec3 base = block.coord.cast<double>() * block_extent();
      for (int k = 0; k < VoxelBlock::kSize; ++k)
        for (int j = 0; j < VoxelBlock::kSize; ++j)
          for (int i = 0; i < VoxelBlock::kSize; ++i) {
            const Vec3 center =
                base + voxel_length_ * Vec3(i + 0.5, j + 0.5, k + 0.5);
            const Vec3 p_cam = vol_to_cam * center;
            if (p_cam.z() <= 0.0) continue;
            const Vec2 px = intr.project(p_cam);
            const int u = static_cast<int>(std::lround(px.x()));
            const int v = static_cast<int>(std::lround(px.y()));
            if (!mask.in_bounds(u, v) || !mask.at(u, v)) continue;
            const float d = frame.depth.at(u, v);
            if (d <= 0.0f) continue;
            const double sdf = d - p_cam.z();
            if (std::abs(sdf) > trunc_dist_) continue;

            Voxel& vox = block.at(i, j, k);
            const float sample =
                std::clamp(static_cast<float>(sdf) * inv_trunc, -1.0f, 1.0f);
            const float w = vox.weight;
            vox.tsdf = (vox.tsdf * w + sample) / (w + 1.0f);
            if (!frame.color.empty())
              vox.color = (vox.color * w + frame.color.at(u, v)) / (w + 1.0f);
            vox.weight = std::min(w + 1.0f, kWeightCap);
            if (mode == IntegrationMode::kForeground) ++vox.fg_count;
            else if (mode == IntegrationMode::kBackground) ++vox.bg_count;
          }
    }
  });
}

bool ScalableTsdfVolume::sample_tsdf(const Vec3& p_vol, float* value) const {
  const Vec3 g = p_vol / voxel_length_ - Vec3(0.5, 0.5, 0.5);
  const Eigen::Vector3i g0(static_cast<int>(std::floor(g.x())),
                           static_cast<int>(std::floor(g.y())),
                           static_cast<int>(std::floor(g.z())));
  const Vec3 f = g - g0.cast<double>();
  float acc = 0.0f;
  for (int dz = 0; dz < 2; ++dz)
    for (int dy = 0; dy < 2; ++dy)
      for (int dx = 0; dx < 2; ++dx) {
        const Vec3 center =
            (g0.cast<double>() + Vec3(dx + 0.5, dy + 0.5, dz + 0.5)) *
            voxel_length_;
        const Voxel* vox = voxel_at(center);
        if (!vox || vox->weight <= 0.0f) return false;
        const double wx = dx ? f.x() : 1.0 - f.x();
        const double wy = dy ? f.y() : 1.0 - f.y();
        const double wz = dz ? f.z() : 1.0 - f.z();
        acc += static_cast<float>(wx * wy * wz) * vox->tsdf;
      }
  *value = acc;
  return true;
}

RenderMaps ScalableTsdfVolume::raycast(const Pose& cam_in_vol,
                                       const Intrinsics& intr,
                                       std::int32_t label, double depth_min,
                                       double depth_max) const {
  require_active("raycast");
  RenderMaps maps(intr.width, intr.height);
  if (blocks_.empty()) return maps;

  const Vec3 origin = cam_in_vol.translation();
  const Mat3 rot = cam_in_vol.rotation();
  const Pose vol_to_cam = cam_in_vol.inverse();
  const double step = voxel_length_;
  const double extent = block_extent();

  parallel_for(0, intr.height, [&](int y) {
    for (int x = 0; x < intr.width; ++x) {
      const Vec3 dir_cam =
          Vec3((x - intr.cx) / intr.fx, (y - intr.cy) / intr.fy, 1.0)
              .normalized();
      const Vec3 dir = rot * dir_cam;
      const double s_max = depth_max / dir_cam.z();

      double s = depth_min;
      bool prev_valid = false;
      double prev_s = 0.0;
      float prev_t = 0.0f;
      while (s < s_max) {
        const Vec3 p = origin + s * dir;
        const Eigen::Vector3i cell = floor_div(p, extent);
        auto it = blocks_.find(cell);
        if (it == blocks_.end()) {
          // skip to the exit of this unallocated block cell
          double exit_s = s + extent;
          for (int i = 0; i < 3; ++i) {
            if (std::abs(dir[i]) < 1e-12) continue;
            const double bound =
                (cell[i] + (dir[i] > 0.0 ? 1 : 0)) * extent;
            exit_s = std::min(exit_s, s + (bound - p[i]) / dir[i]);
          }
          s = std::max(exit_s, s) + 1e-6;
          prev_valid = false;
          continue;
        }
        const Voxel* vox = voxel_at(p);
        if (!vox || vox->weight <= 0.0f) {
          s += step;
          prev_valid = false;
          continue;
        }
        const float t = vox->tsdf;
        if (prev_valid && prev_t > 0.0f && t <= 0.0f) {
          // refine the crossing with interpolated samples when available
          float f0 = prev_t, f1 = t;
          float s0f = 0.0f, s1f = 0.0f;
          if (sample_tsdf(origin + prev_s * dir, &s0f) &&
              sample_tsdf(origin + s * dir, &s1f) && s0f > 0.0f &&
              s1f <= 0.0f) {
            f0 = s0f;
            f1 = s1f;
          }
          const double hit_s =
              prev_s + (s - prev_s) * (f0 / std::max(f0 - f1, 1e-12f));
          const Vec3 hit = origin + hit_s * dir;

          // gradient normal from interpolated central differences
          Vec3 grad = Vec3::Zero();
          bool grad_ok = true;
          for (int i = 0; i < 3 && grad_ok; ++i) {
            Vec3 dp = Vec3::Zero();
            dp[i] = voxel_length_;
            float gp = 0.0f, gm = 0.0f;
            if (sample_tsdf(hit + dp, &gp) && sample_tsdf(hit - dp, &gm))
              grad[i] = gp - gm;
            else
              grad_ok = false;
          }
          const Voxel* hv = voxel_at(hit);
          if (!grad_ok || grad.norm() < 1e-12) {
            // fall back to the march direction
            grad = -dir;
          }
          Vec3 n_cam = vol_to_cam.rotation() * grad.normalized();
          const Vec3 v_cam = vol_to_cam * hit;
          if (v_cam.z() < depth_min || v_cam.z() > depth_max) break;
          if (n_cam.dot(v_cam) > 0.0) n_cam = -n_cam;

          maps.vertex.at(x, y) = v_cam.cast<float>();
          maps.normal.at(x, y) = n_cam.cast<float>();
          maps.color.at(x, y) = hv ? luma(hv->color) : 0.0f;
          maps.label.at(x, y) = label;
          break;
        }
        prev_valid = true;
        prev_t = t;
        prev_s = s;
        s += step;
      }
    }
  });
  return maps;
}

double ScalableTsdfVolume::visible_ratio(const Pose& cam_in_vol,
                                         const Intrinsics& intr,
                                         double depth_min,
                                         double depth_max) const {
  if (blocks_.empty())
    throw Error(ErrorCode::kEmptyVolume, "visible_ratio: no blocks");
  const Pose vol_to_cam = cam_in_vol.inverse();
  size_t visible = 0;
  for (const auto& [coord, block] : blocks_) {
    const Vec3 center =
        (coord.cast<double>() + Vec3(0.5, 0.5, 0.5)) * block_extent();
    const Vec3 p_cam = vol_to_cam * center;
    if (p_cam.z() < depth_min || p_cam.z() > depth_max) continue;
    if (intr.in_image(intr.project(p_cam))) ++visible;
  }
  return static_cast<double>(visible) / static_cast<double>(blocks_.size());
}

PointCloud ScalableTsdfVolume::extract_surface_points(
    bool foreground_only, double fg_ratio_threshold) const {
  require_active("extract_surface_points");

  auto fg_pass = [&](const Voxel& v) {
    if (!foreground_only) return true;
    const double total = static_cast<double>(v.fg_count) + v.bg_count;
    if (total <= 0.0) return false;
    return v.fg_count / total > fg_ratio_threshold;
  };

  // deterministic order
  std::vector<const VoxelBlock*> order;
  order.reserve(blocks_.size());
  for (const auto& [coord, block] : blocks_) order.push_back(&block);
  std::sort(order.begin(), order.end(),
            [](const VoxelBlock* a, const VoxelBlock* b) {
              return std::lexicographical_compare(
                  a->coord.data(), a->coord.data() + 3, b->coord.data(),
                  b->coord.data() + 3);
            });

  PointCloud cloud;
  for (const VoxelBlock* block : order) {
    const Vec3 base = block->coord.cast<double>() * block_extent();
    for (int k = 0; k < VoxelBlock::kSize; ++k)
      for (int j = 0; j < VoxelBlock::kSize; ++j)
        for (int i = 0; i < VoxelBlock::kSize; ++i) {
          const Voxel& v0 = block->at(i, j, k);
          if (v0.weight <= 0.0f) continue;
          const Vec3 c0 =
              base + voxel_length_ * Vec3(i + 0.5, j + 0.5, k + 0.5);
          for (int axis = 0; axis < 3; ++axis) {
            Vec3 c1 = c0;
            c1[axis] += voxel_length_;
            const Voxel* v1 = voxel_at(c1);
            if (!v1 || v1->weight <= 0.0f) continue;
            if (!(v0.tsdf > 0.0f && v1->tsdf < 0.0f) &&
                !(v0.tsdf < 0.0f && v1->tsdf > 0.0f))
              continue;
            if (!fg_pass(v0) || !fg_pass(*v1)) continue;
            const double a = v0.tsdf / (double(v0.tsdf) - v1->tsdf);
            const Vec3 p = c0 + a * (c1 - c0);

            Vec3 grad = Vec3::Zero();
            for (int g = 0; g < 3; ++g) {
              Vec3 dp = Vec3::Zero();
              dp[g] = voxel_length_;
              float fp = 0.0f, fm = 0.0f;
              const bool okp = sample_tsdf(p + dp, &fp);
              const bool okm = sample_tsdf(p - dp, &fm);
              if (okp && okm) grad[g] = fp - fm;
            }
            if (grad.norm() < 1e-12) {
              grad = Vec3::Zero();
              grad[axis] = v1->tsdf - v0.tsdf;
            }
            OrientedPoint pt;
            pt.position = p.cast<float>();
            pt.normal = grad.normalized().cast<float>();
            cloud.push_back(pt);
          }
        }
  }
  return cloud;
}

namespace {

template <typename T>
void put(std::string& buf, const T& v) {
  const char* p = reinterpret_cast<const char*>(&v);
  buf.append(p, sizeof(T));
}

template <typename T>
bool get(std::istream& in, T* v) {
  return static_cast<bool>(in.read(reinterpret_cast<char*>(v), sizeof(T)));
}

void serialize_voxels(std::string& buf, const VoxelBlock& block) {
  for (const Voxel& v : block.voxels) {
    put(buf, v.tsdf);
    put(buf, v.weight);
    put(buf, v.color.x());
    put(buf, v.color.y());
    put(buf, v.color.z());
    put(buf, v.fg_count);
    put(buf, v.bg_count);
  }
}

std::vector<const VoxelBlock*> sorted_blocks(
    const std::unordered_map<Eigen::Vector3i, VoxelBlock, BlockHash>& blocks) {
  std::vector<const VoxelBlock*> order;
  order.reserve(blocks.size());
  for (const auto& [coord, block] : blocks) order.push_back(&block);
  std::sort(order.begin(), order.end(),
            [](const VoxelBlock* a, const VoxelBlock* b) {
              return std::lexicographical_compare(
                  a->coord.data(), a->coord.data() + 3, b->coord.data(),
                  b->coord.data() + 3);
            });
  return order;
}

}  // namespace

void ScalableTsdfVolume::offload(const std::string& path) {
  require_active("offload");
  std::string buf;
  buf.reserve(64 + blocks_.size() * (12 + VoxelBlock::kVoxelCount * 28));
  put(buf, voxel_length_);
  put(buf, trunc_dist_);
  put(buf, static_cast<std::uint64_t>(blocks_.size()));
  for (const VoxelBlock* block : sorted_blocks(blocks_)) {
    put(buf, block->coord.x());
    put(buf, block->coord.y());
    put(buf, block->coord.z());
    serialize_voxels(buf, *block);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !out.write(buf.data(), static_cast<std::streamsize>(buf.size())))
    throw Error(ErrorCode::kStoreIoFailure, "offload: cannot write " + path);
  out.close();
  if (!out)
    throw Error(ErrorCode::kStoreIoFailure, "offload: close failed " + path);
  blocks_.clear();
  active_ = false;
  offload_path_ = path;
}

void ScalableTsdfVolume::reload() {
  if (active_)
    throw Error(ErrorCode::kVolumeOffloaded, "reload: volume is active");
  std::ifstream in(offload_path_, std::ios::binary);
  if (!in)
    throw Error(ErrorCode::kStoreIoFailure,
                "reload: cannot open " + offload_path_);
  double vl = 0.0, td = 0.0;
  std::uint64_t count = 0;
  if (!get(in, &vl) || !get(in, &td) || !get(in, &count))
    throw Error(ErrorCode::kStoreIoFailure, "reload: truncated header");
  voxel_length_ = vl;
  trunc_dist_ = td;
  blocks_.clear();
  for (std::uint64_t b = 0; b < count; ++b) {
    Eigen::Vector3i coord;
    if (!get(in, &coord.x()) || !get(in, &coord.y()) || !get(in, &coord.z()))
      throw Error(ErrorCode::kStoreIoFailure, "reload: truncated block coord");
    VoxelBlock block;
    block.coord = coord;
    for (Voxel& v : block.voxels) {
      float r = 0, g = 0, bl = 0;
      if (!get(in, &v.tsdf) || !get(in, &v.weight) || !get(in, &r) ||
          !get(in, &g) || !get(in, &bl) || !get(in, &v.fg_count) ||
          !get(in, &v.bg_count))
        throw Error(ErrorCode::kStoreIoFailure, "reload: truncated voxels");
      v.color = Vec3f(r, g, bl);
    }
    blocks_.emplace(coord, std::move(block));
  }
  active_ = true;
}

std::uint64_t ScalableTsdfVolume::payload_checksum() const {
  std::string buf;
  for (const VoxelBlock* block : sorted_blocks(blocks_)) {
    put(buf, block->coord.x());
    put(buf, block->coord.y());
    put(buf, block->coord.z());
    serialize_voxels(buf, *block);
  }
  // FNV-1a
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : buf) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace objslam
