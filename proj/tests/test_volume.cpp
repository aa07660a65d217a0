#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <random>

#include "objslam/volume/tsdf_volume.hpp"
#include "test_util.hpp"

using namespace objslam;
using namespace objslam::testutil;

namespace {

MaskImage full_mask(int w, int h) { return MaskImage(w, h, 1); }

RgbdFrame plane_frame(const Intrinsics& k, double z) {
  return make_frame(wavy_color(k.width, k.height), DepthImage(k.width, k.height, float(z)));
}

}  // namespace

TEST_CASE("constructor validates parameters") {
  CHECK_THROWS_AS(ScalableTsdfVolume(0.0), Error);
  CHECK_THROWS_AS(ScalableTsdfVolume(0.01, 0.015), Error);
  ScalableTsdfVolume v(0.01);
  CHECK(v.trunc_dist() == doctest::Approx(0.05));
}

TEST_CASE("empty mask leaves volume unchanged") {
  const Intrinsics k = test_intrinsics();
  ScalableTsdfVolume vol(0.01);
  vol.integrate(plane_frame(k, 2.0), MaskImage(k.width, k.height, 0),
                Pose::identity(), k);
  CHECK(vol.block_count() == 0);
}

TEST_CASE("mask dimension mismatch") {
  const Intrinsics k = test_intrinsics();
  ScalableTsdfVolume vol(0.01);
  CHECK_THROWS_AS(
      vol.integrate(plane_frame(k, 2.0), MaskImage(8, 8, 1), Pose::identity(), k),
      Error);
}

TEST_CASE("plane integration: near-surface tsdf small, sign flips") {
  const Intrinsics k = test_intrinsics();
  ScalableTsdfVolume vol(0.01);
  const double z_plane = 2.0;
  vol.integrate(plane_frame(k, z_plane), full_mask(k.width, k.height),
                Pose::identity(), k);
  CHECK(vol.block_count() > 0);

  int checked = 0;
  for (const auto& [coord, block] : vol.blocks()) {
    const Vec3 base = coord.cast<double>() * vol.block_extent();
    for (int kk = 0; kk < 16; ++kk)
      for (int jj = 0; jj < 16; ++jj)
        for (int ii = 0; ii < 16; ++ii) {
          const Voxel& v = block.at(ii, jj, kk);
          if (v.weight <= 0.0f) continue;
          const Vec3 c = base + 0.01 * Vec3(ii + 0.5, jj + 0.5, kk + 0.5);
          if (std::abs(c.x()) > 0.3 || std::abs(c.y()) > 0.3) continue;
          const double sdf = z_plane - c.z();  // analytic plane SDF along z
          CHECK(v.tsdf * (sdf >= 0 ? 1.0 : -1.0) >= -1e-6);
          if (std::abs(sdf) <= 0.5 * vol.voxel_length() + 1e-9) {
            CHECK(std::abs(v.tsdf) < 0.01 / vol.trunc_dist());
            ++checked;
          }
        }
  }
  CHECK(checked > 50);
}

TEST_CASE("double integration doubles weights, keeps tsdf") {
  const Intrinsics k = test_intrinsics();
  ScalableTsdfVolume once(0.01), twice(0.01);
  const RgbdFrame f = plane_frame(k, 1.5);
  const MaskImage m = full_mask(k.width, k.height);
  once.integrate(f, m, Pose::identity(), k);
  twice.integrate(f, m, Pose::identity(), k);
  twice.integrate(f, m, Pose::identity(), k);
  REQUIRE(once.block_count() == twice.block_count());
  for (const auto& [coord, b1] : once.blocks()) {
    const auto& b2 = twice.blocks().at(coord);
    for (int i = 0; i < VoxelBlock::kVoxelCount; ++i) {
      CHECK(b1.voxels[i].tsdf == doctest::Approx(b2.voxels[i].tsdf).epsilon(1e-6));
      CHECK(b2.voxels[i].weight == doctest::Approx(2.0f * b1.voxels[i].weight));
    }
  }
}

TEST_CASE("fusion order independence") {
  const Intrinsics k = test_intrinsics();
  const RgbdFrame fa = plane_frame(k, 1.2);
  const RgbdFrame fb = plane_frame(k, 1.26);
  const MaskImage m = full_mask(k.width, k.height);
  ScalableTsdfVolume vab(0.01), vba(0.01);
  vab.integrate(fa, m, Pose::identity(), k);
  vab.integrate(fb, m, Pose::identity(), k);
  vba.integrate(fb, m, Pose::identity(), k);
  vba.integrate(fa, m, Pose::identity(), k);
  REQUIRE(vab.block_count() == vba.block_count());
  for (const auto& [coord, b1] : vab.blocks()) {
    const auto& b2 = vba.blocks().at(coord);
    for (int i = 0; i < VoxelBlock::kVoxelCount; ++i) {
      CHECK(std::abs(b1.voxels[i].tsdf - b2.voxels[i].tsdf) < 1e-6f);
      CHECK(b1.voxels[i].weight == b2.voxels[i].weight);
    }
  }
}

TEST_CASE("conservative block allocation along rays") {
  const Intrinsics k = test_intrinsics(32, 24);
  ScalableTsdfVolume vol(0.02);
  const RgbdFrame f =
      make_frame(constant_color(32, 24), sphere_depth(k, {0, 0, 1.5}, 0.5));
  vol.integrate(f, full_mask(32, 24), Pose::identity(), k);
  for (int y = 0; y < 24; ++y)
    for (int x = 0; x < 32; ++x) {
      const float d = f.depth.at(x, y);
      if (d <= 0.0f) continue;
      const Vec3 ray((x - k.cx) / k.fx, (y - k.cy) / k.fy, 1.0);
      for (double z = d - vol.trunc_dist(); z <= d + vol.trunc_dist();
           z += vol.voxel_length() * 0.5) {
        if (z <= 0.0) continue;
        const Vec3 p = ray * z;
        const Eigen::Vector3i b(
            int(std::floor(p.x() / vol.block_extent())),
            int(std::floor(p.y() / vol.block_extent())),
            int(std::floor(p.z() / vol.block_extent())));
        REQUIRE(vol.blocks().count(b) == 1);
      }
    }
}

TEST_CASE("raycast on empty volume is all invalid") {
  const Intrinsics k = test_intrinsics();
  ScalableTsdfVolume vol(0.01);
  const RenderMaps maps = vol.raycast(Pose::identity(), k);
  for (int y = 0; y < k.height; ++y)
    for (int x = 0; x < k.width; ++x) CHECK(!maps.valid(x, y));
}

TEST_CASE("sphere integrate/raycast depth consistency") {
  const Intrinsics k = test_intrinsics(64, 48);
  ScalableTsdfVolume vol(0.01);
  const DepthImage gt = sphere_depth(k, {0, 0, 1.2}, 0.5);
  const RgbdFrame f = make_frame(wavy_color(64, 48), gt);
  vol.integrate(f, full_mask(64, 48), Pose::identity(), k);
  const RenderMaps maps = vol.raycast(Pose::identity(), k);

  double sq = 0.0;
  int n = 0, n_gt = 0;
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) {
      if (gt.at(x, y) <= 0.0f) continue;
      ++n_gt;
      if (!maps.valid(x, y)) continue;
      const double err = maps.vertex.at(x, y).z() - gt.at(x, y);
      sq += err * err;
      ++n;
    }
  REQUIRE(n > 500);
  CHECK(n > 0.9 * n_gt);
  CHECK(std::sqrt(sq / n) < vol.voxel_length());
}

TEST_CASE("plane raycast normals") {
  const Intrinsics k = test_intrinsics(64, 48);
  ScalableTsdfVolume vol(0.01);
  vol.integrate(plane_frame(k, 1.5), full_mask(64, 48), Pose::identity(), k);
  const RenderMaps maps = vol.raycast(Pose::identity(), k);
  int n_valid = 0, n_good = 0;
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) {
      if (!maps.valid(x, y)) continue;
      ++n_valid;
      const Vec3 n = maps.normal.at(x, y).cast<double>();
      const double angle =
          std::acos(std::clamp(n.dot(Vec3(0, 0, -1)), -1.0, 1.0));
      if (angle < M_PI / 180.0) ++n_good;
    }
  REQUIRE(n_valid > 1000);
  CHECK(n_good >= 0.95 * n_valid);
}

TEST_CASE("visible ratio basics and brute-force equality") {
  const Intrinsics k = test_intrinsics();
  ScalableTsdfVolume vol(0.02);
  vol.integrate(plane_frame(k, 1.5), full_mask(k.width, k.height),
                Pose::identity(), k);

  // camera pulled back far enough to contain all blocks
  const Pose back(Mat3::Identity(), Vec3(0, 0, -2.0));
  CHECK(vol.visible_ratio(back, k) == doctest::Approx(1.0));

  // facing away
  Mat3 flip;
  flip << 1, 0, 0, 0, -1, 0, 0, 0, -1;
  CHECK(vol.visible_ratio(Pose(flip, Vec3::Zero()), k) == doctest::Approx(0.0));

  // equality with brute force for random poses
  std::mt19937 rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const Pose cam = random_pose(rng, 0.6, 1.0);
    const Pose vol_to_cam = cam.inverse();
    size_t visible = 0;
    for (const auto& [coord, block] : vol.blocks()) {
      const Vec3 center =
          (coord.cast<double>() + Vec3(0.5, 0.5, 0.5)) * vol.block_extent();
      const Vec3 p = vol_to_cam * center;
      if (p.z() < kDepthMin || p.z() > kDepthMax) continue;
      const Vec2 px = k.project(p);
      if (px.x() >= 0 && px.x() <= k.width - 1 && px.y() >= 0 &&
          px.y() <= k.height - 1)
        ++visible;
    }
    CHECK(vol.visible_ratio(cam, k) ==
          doctest::Approx(double(visible) / vol.block_count()));
  }

  ScalableTsdfVolume empty(0.02);
  CHECK_THROWS_AS(empty.visible_ratio(Pose::identity(), k), Error);
}

TEST_CASE("half-covered slab gives ratio near one half") {
  const Intrinsics k = test_intrinsics(64, 48);
  ScalableTsdfVolume vol(0.02);
  // slab of blocks from integrating a wide plane
  vol.integrate(plane_frame(k, 2.0), full_mask(64, 48), Pose::identity(), k);
  // shift the camera sideways so roughly half the slab leaves the frustum
  const Pose cam(Mat3::Identity(), Vec3(-2.0 * std::tan(0.625), 0.0, 0.0));
  const double r = vol.visible_ratio(cam, k);
  const double per_block = 1.0 / double(vol.block_count());
  CHECK(r > 0.3);
  CHECK(r < 0.7);
  CHECK(r >= per_block);
}

TEST_CASE("surface extraction on sphere") {
  const Intrinsics k = test_intrinsics(64, 48);
  ScalableTsdfVolume vol(0.01);
  const Vec3 center(0, 0, 1.2);
  const double radius = 0.5;
  vol.integrate(
      make_frame(constant_color(64, 48), sphere_depth(k, center, radius)),
      full_mask(64, 48), Pose::identity(), k);
  const PointCloud cloud = vol.extract_surface_points();
  REQUIRE(cloud.size() > 1000);
  double sq = 0.0;
  for (const auto& pt : cloud) {
    const double err = (pt.position.cast<double>() - center).norm() - radius;
    CHECK(std::abs(err) < vol.voxel_length());
    sq += err * err;
  }
  CHECK(std::sqrt(sq / cloud.size()) < vol.voxel_length() / 2.0);
}

TEST_CASE("empty volume extracts empty cloud") {
  ScalableTsdfVolume vol(0.01);
  CHECK(vol.extract_surface_points().empty());
}

TEST_CASE("background-only voxels filtered by foreground extraction") {
  const Intrinsics k = test_intrinsics();
  ScalableTsdfVolume vol(0.01);
  vol.integrate(plane_frame(k, 1.0), full_mask(k.width, k.height),
                Pose::identity(), k, IntegrationMode::kBackground);
  CHECK(!vol.extract_surface_points(false).empty());
  CHECK(vol.extract_surface_points(true).empty());
}

TEST_CASE("fg/bg counts tally per mode") {
  const Intrinsics k = test_intrinsics(32, 24);
  ScalableTsdfVolume vol(0.01);
  const RgbdFrame f = plane_frame(k, 1.0);
  const MaskImage m = full_mask(32, 24);
  vol.integrate(f, m, Pose::identity(), k, IntegrationMode::kForeground);
  vol.integrate(f, m, Pose::identity(), k, IntegrationMode::kForeground);
  vol.integrate(f, m, Pose::identity(), k, IntegrationMode::kBackground);
  vol.integrate(f, m, Pose::identity(), k, IntegrationMode::kPlain);
  for (const auto& [coord, block] : vol.blocks())
    for (const Voxel& v : block.voxels) {
      if (v.weight <= 0.0f) continue;
      CHECK(v.weight == doctest::Approx(4.0f));
      CHECK(v.fg_count == 2);
      CHECK(v.bg_count == 1);
    }
}

TEST_CASE("offload/reload round trip is bit identical") {
  const Intrinsics k = test_intrinsics(32, 24);
  ScalableTsdfVolume vol(0.013);
  std::mt19937 rng(9);
  std::uniform_real_distribution<float> ud(0.5f, 3.0f);
  for (int pass = 0; pass < 2; ++pass) {
    DepthImage d(32, 24);
    for (int y = 0; y < 24; ++y)
      for (int x = 0; x < 32; ++x) d.at(x, y) = ud(rng);
    vol.integrate(make_frame(wavy_color(32, 24), d), full_mask(32, 24),
                  Pose::identity(), k,
                  pass ? IntegrationMode::kForeground
                       : IntegrationMode::kBackground);
  }
  const std::uint64_t before = vol.payload_checksum();
  const size_t blocks_before = vol.block_count();
  const std::string path = "/tmp/objslam_vol_test.bin";
  vol.offload(path);
  CHECK(!vol.active());
  CHECK_THROWS_AS(vol.raycast(Pose::identity(), k), Error);
  CHECK_THROWS_AS(
      vol.integrate(plane_frame(k, 1.0), full_mask(32, 24), Pose::identity(), k),
      Error);
  vol.reload();
  CHECK(vol.active());
  CHECK(vol.block_count() == blocks_before);
  CHECK(vol.payload_checksum() == before);
  std::remove(path.c_str());
}

TEST_CASE("offload empty volume round trips") {
  ScalableTsdfVolume vol(0.01);
  const std::string path = "/tmp/objslam_vol_empty.bin";
  vol.offload(path);
  vol.reload();
  CHECK(vol.block_count() == 0);
  CHECK(vol.active());
  std::remove(path.c_str());
}

TEST_CASE("integrate-then-raycast depth RMS below voxel length") {
  const Intrinsics k = test_intrinsics(64, 48);
  ScalableTsdfVolume vol(0.01);
  const Vec3 n_plane = Vec3(0.3, 0.2, -1.0).normalized();
  const double c = n_plane.dot(Vec3(0, 0, 1.4));
  const DepthImage gt = plane_depth(k, n_plane, c);
  vol.integrate(make_frame(wavy_color(64, 48), gt), full_mask(64, 48),
                Pose::identity(), k);
  const RenderMaps maps = vol.raycast(Pose::identity(), k);
  double sq = 0.0;
  int n = 0;
  for (int y = 0; y < 48; ++y)
    for (int x = 0; x < 64; ++x) {
      if (gt.at(x, y) <= 0.0f || !maps.valid(x, y)) continue;
      const double err = maps.vertex.at(x, y).z() - gt.at(x, y);
      sq += err * err;
      ++n;
    }
  REQUIRE(n > 1500);
  CHECK(std::sqrt(sq / n) < vol.voxel_length());
}
