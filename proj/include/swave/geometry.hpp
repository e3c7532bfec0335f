#pragma once

#include <array>

#include <Eigen/Core>

namespace swave {

using Vec3 = Eigen::Vector3d;

inline std::array<double, 3> to_array(const Vec3& v) { return {v.x(), v.y(), v.z()}; }

} // namespace swave
