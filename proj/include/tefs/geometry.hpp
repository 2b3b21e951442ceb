#pragma once

#include <Eigen/Dense>
#include <cmath>

namespace tefs {

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double d) { return d * kPi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / kPi; }

// Rigid transform, world <- local. Rotation is kept orthonormal by
// construction everywhere poses are produced.
struct PoseSE3 {
  Eigen::Matrix3d rotation = Eigen::Matrix3d::Identity();
  Eigen::Vector3d translation = Eigen::Vector3d::Zero();

  PoseSE3() = default;
  PoseSE3(const Eigen::Matrix3d& r, const Eigen::Vector3d& t)
      : rotation(r), translation(t) {}

  static PoseSE3 identity() { return {}; }

  // Planar pose: position (x, y, z), heading about +Z.
  static PoseSE3 planar(double x, double y, double z, double yawRad) {
    PoseSE3 p;
    p.rotation = Eigen::AngleAxisd(yawRad, Eigen::Vector3d::UnitZ()).toRotationMatrix();
    p.translation = Eigen::Vector3d(x, y, z);
    return p;
  }

  Eigen::Vector3d operator*(const Eigen::Vector3d& p) const {
    return rotation * p + translation;
  }

  PoseSE3 operator*(const PoseSE3& other) const {
    return {rotation * other.rotation, rotation * other.translation + translation};
  }

  PoseSE3 inverse() const {
    Eigen::Matrix3d rt = rotation.transpose();
    return {rt, -(rt * translation)};
  }

  bool rotation_orthonormal(double tol = 1e-9) const {
    double offIdentity =
        (rotation * rotation.transpose() - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff();
    return offIdentity <= tol && std::abs(rotation.determinant() - 1.0) <= tol;
  }
};

// Rotation angle of R in degrees, clamped against acos domain noise.
inline double rotation_angle_deg(const Eigen::Matrix3d& r) {
  double c = (r.trace() - 1.0) / 2.0;
  c = std::min(1.0, std::max(-1.0, c));
  return rad2deg(std::acos(c));
}

}  // namespace tefs
