#pragma once

#include <Eigen/Dense>

#include <array>

namespace tpmsvox {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Axis-aligned box [lo, hi] in millimetres.
struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  static Box cube(double edge) { return {Vec3::Zero(), Vec3::Constant(edge)}; }

  Vec3 extent() const { return hi - lo; }
  double volume() const {
    const Vec3 e = extent();
    return e.x() * e.y() * e.z();
  }
  bool empty() const { return (hi.array() <= lo.array()).any(); }
};

}  // namespace tpmsvox
