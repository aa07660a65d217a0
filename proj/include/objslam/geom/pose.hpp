#pragma once

#include <Eigen/Core>

namespace objslam {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec6 = Eigen::Matrix<double, 6, 1>;
using Mat6 = Eigen::Matrix<double, 6, 6>;

// Tangent-space vector of SE(3); rotational part first, translational second.
using Twist = Vec6;

// Rigid transform in SE(3). A pose named a_from_b maps b-frame coordinates
// into the a frame: x_a = R x_b + t.
class Pose {
 public:
  Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}
  Pose(const Mat3& rotation, const Vec3& translation)
      : rotation_(rotation), translation_(translation) {}

  static Pose identity() { return Pose(); }

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 transform(const Vec3& p) const { return rotation_ * p + translation_; }
  Vec3 operator*(const Vec3& p) const { return transform(p); }

  Pose compose(const Pose& rhs) const;
  Pose operator*(const Pose& rhs) const { return compose(rhs); }
  Pose inverse() const;

  Mat4 matrix() const;
  static Pose from_matrix(const Mat4& m);

  // rotation orthonormal and right-handed within tol
  bool is_valid(double tol = 1e-9) const;
  void orthonormalize();

 private:
  Mat3 rotation_;
  Vec3 translation_;
  // Compositions since the last re-orthonormalization; renormalized once a
  // chain exceeds kMaxChain so long products stay in SO(3).
  int chain_ = 0;
  static constexpr int kMaxChain = 1000;
};

Mat3 skew(const Vec3& v);

Pose se3_exp(const Twist& xi);
Twist se3_log(const Pose& pose);

// Relative error in the tangent space: Log(x^-1 * y).
Twist ominus(const Pose& y, const Pose& x);

}  // namespace objslam
