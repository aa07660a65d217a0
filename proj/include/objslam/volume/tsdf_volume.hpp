#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "objslam/core/image.hpp"
#include "objslam/geom/frame.hpp"
#include "objslam/geom/maps.hpp"
#include "objslam/geom/pose.hpp"

namespace objslam {

struct Voxel {
  float tsdf = 0.0f;  // signed distance normalized by trunc_dist
  float weight = 0.0f;
  Vec3f color = Vec3f::Zero();
  std::uint32_t fg_count = 0;
  std::uint32_t bg_count = 0;
};

struct BlockHash {
  size_t operator()(const Eigen::Vector3i& v) const noexcept {
    size_t seed = 0;
    for (int i = 0; i < 3; ++i)
      seed ^= std::hash<int>()(v[i]) + 0x9e3779b9 + (seed << 6) + (seed >> 2);
    return seed;
  }
};

struct VoxelBlock {
  static constexpr int kSize = 16;
  static constexpr int kVoxelCount = kSize * kSize * kSize;

  Eigen::Vector3i coord = Eigen::Vector3i::Zero();
  std::vector<Voxel> voxels = std::vector<Voxel>(kVoxelCount);

  Voxel& at(int i, int j, int k) {
    return voxels[(k * kSize + j) * kSize + i];
  }
  const Voxel& at(int i, int j, int k) const {
    return voxels[(k * kSize + j) * kSize + i];
  }
};

enum class IntegrationMode { kPlain, kForeground, kBackground };

struct OrientedPoint {
  Vec3f position = Vec3f::Zero();
  Vec3f normal = Vec3f::Zero();
};
using PointCloud = std::vector<OrientedPoint>;

// Spatially-hashed truncated signed distance volume built from 16^3 voxel
// blocks allocated on demand around observed surfaces.
//
// Integration and raycast kernels are data-parallel with block/row-disjoint
// writes; a volume instance is single-writer multi-reader.
class ScalableTsdfVolume {
 public:
  static constexpr float kWeightCap = 255.0f;

  explicit ScalableTsdfVolume(double voxel_length, double trunc_dist = 0.0);

  double voxel_length() const { return voxel_length_; }
  double trunc_dist() const { return trunc_dist_; }
  double block_extent() const { return VoxelBlock::kSize * voxel_length_; }

  bool active() const { return active_; }
  const std::string& offload_path() const { return offload_path_; }
  size_t block_count() const { return blocks_.size(); }

  // Fuses the masked depth/color samples; cam_in_vol is the camera pose in
  // the volume frame. Foreground/background mode additionally bumps the
  // per-voxel fg/bg counts.
  void integrate(const RgbdFrame& frame, const MaskImage& mask,
                 const Pose& cam_in_vol, const Intrinsics& intr,
                 IntegrationMode mode = IntegrationMode::kPlain);

  // Per-pixel surface hit by marching rays through allocated blocks; vertex
  // and normal are returned in the camera frame, label = `label` where a
  // surface was found.
  RenderMaps raycast(const Pose& cam_in_vol, const Intrinsics& intr,
                     std::int32_t label = kLabelBackground,
                     double depth_min = kDepthMin,
                     double depth_max = kDepthMax) const;

  // Fraction of allocated blocks whose center falls in the camera frustum.
  double visible_ratio(const Pose& cam_in_vol, const Intrinsics& intr,
                       double depth_min = kDepthMin,
                       double depth_max = kDepthMax) const;

  // One oriented point per zero-crossing voxel pair, in the volume frame.
  // With foreground_only, both voxels of a pair must have a foreground
  // ratio above fg_ratio_threshold.
  PointCloud extract_surface_points(bool foreground_only = false,
                                    double fg_ratio_threshold = 0.5) const;

  // Drops all blocks, keeping the volume identity and parameters.
  void reset() { blocks_.clear(); }

  // Persists blocks to `path` (little-endian, header + raw voxel payload)
  // and releases them; reload restores them bit-identically.
  void offload(const std::string& path);
  void reload();

  // Digest over the sorted voxel payload; pose updates must not change it.
  std::uint64_t payload_checksum() const;

  const std::unordered_map<Eigen::Vector3i, VoxelBlock, BlockHash>& blocks()
      const {
    return blocks_;
  }

  // Trilinearly interpolated tsdf at a volume-frame point; false when any
  // of the eight supporting voxels is unobserved.
  bool sample_tsdf(const Vec3& p_vol, float* value) const;

 private:
  Eigen::Vector3i block_of(const Vec3& p_vol) const;
  const Voxel* voxel_at(const Vec3& p_vol) const;
  void require_active(const char* op) const;

  double voxel_length_;
  double trunc_dist_;
  bool active_ = true;
  std::string offload_path_;
  std::unordered_map<Eigen::Vector3i, VoxelBlock, BlockHash> blocks_;
};

}  // namespace objslam
