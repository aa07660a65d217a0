#include "objslam/geom/pose.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/Geometry>

namespace objslam {

Pose Pose::compose(const Pose& rhs) const {
  Pose out(rotation_ * rhs.rotation_,
           rotation_ * rhs.translation_ + translation_);
  out.chain_ = std::max(chain_, rhs.chain_) + 1;
  if (out.chain_ > kMaxChain) out.orthonormalize();
  return out;
}

Pose Pose::inverse() const {
  Pose out(rotation_.transpose(), -(rotation_.transpose() * translation_));
  out.chain_ = chain_;
  return out;
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Pose Pose::from_matrix(const Mat4& m) {
  return Pose(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
}

bool Pose::is_valid(double tol) const {
  if (!rotation_.allFinite() || !translation_.allFinite()) return false;
  const Mat3 rtr = rotation_.transpose() * rotation_;
  if ((rtr - Mat3::Identity()).cwiseAbs().maxCoeff() > tol) return false;
  return std::abs(rotation_.determinant() - 1.0) <= tol;
}

void Pose::orthonormalize() {
  Eigen::Quaterniond q(rotation_);
  q.normalize();
  rotation_ = q.toRotationMatrix();
  chain_ = 0;
}

Mat3 skew(const Vec3& v) {
  Mat3 m;
  m << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return m;
}

Pose se3_exp(const Twist& xi) {
  const Vec3 omega = xi.head<3>();
  const Vec3 nu = xi.tail<3>();
  const double theta = omega.norm();
  const Mat3 w = skew(omega);

  double a, b, c;  // sin t/t, (1-cos t)/t^2, (t-sin t)/t^3
  if (theta < 1e-8) {
    const double t2 = theta * theta;
    a = 1.0 - t2 / 6.0;
    b = 0.5 - t2 / 24.0;
    c = 1.0 / 6.0 - t2 / 120.0;
  } else {
    const double t2 = theta * theta;
    a = std::sin(theta) / theta;
    b = (1.0 - std::cos(theta)) / t2;
    c = (theta - std::sin(theta)) / (t2 * theta);
  }

  const Mat3 rotation = Mat3::Identity() + a * w + b * w * w;
  const Mat3 v = Mat3::Identity() + b * w + c * w * w;
  return Pose(rotation, v * nu);
}

Twist se3_log(const Pose& pose) {
  const Eigen::AngleAxisd aa(Eigen::Quaterniond(pose.rotation()));
  const double theta = aa.angle();
  const Vec3 omega = theta * aa.axis();
  const Mat3 w = skew(omega);

  // V^-1 = I - w/2 + coef * w^2
  double coef;
  if (theta < 1e-5) {
    coef = 1.0 / 12.0 + theta * theta / 720.0;
  } else {
    const double a = std::sin(theta) / theta;
    const double b = (1.0 - std::cos(theta)) / (theta * theta);
    coef = (1.0 - a / (2.0 * b)) / (theta * theta);
  }
  const Mat3 v_inv = Mat3::Identity() - 0.5 * w + coef * w * w;

  Twist xi;
  xi.head<3>() = omega;
  xi.tail<3>() = v_inv * pose.translation();
  return xi;
}

Twist ominus(const Pose& y, const Pose& x) {
  return se3_log(x.inverse() * y);
}

}  // namespace objslam
