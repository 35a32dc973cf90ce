#pragma once

#include <Eigen/Dense>

#include <cstring>

namespace ora {

/// LiDAR scan in the velodyne frame: x forward, y left, z up.
///
/// One row per return: x, y, z in metres and reflectance in [0, 1].
/// Row-major float32 storage matches the on-disk layout exactly, so
/// serialization is a straight copy of the buffer and round trips are
/// bit-exact. Point order is meaningful and preserved everywhere.
struct PointCloud {
  using Storage = Eigen::Matrix<float, Eigen::Dynamic, 4, Eigen::RowMajor>;

  Storage points{0, 4};

  Eigen::Index size() const { return points.rows(); }

  /// Coordinates of point i widened to double for geometry work.
  Eigen::Vector3d xyz(Eigen::Index i) const {
    return points.row(i).head<3>().cast<double>();
  }

  float reflectance(Eigen::Index i) const { return points(i, 3); }

  /// Bit-level equality (distinguishes -0.0f from 0.0f).
  bool operator==(const PointCloud& other) const {
    if (points.rows() != other.points.rows()) return false;
    if (points.rows() == 0) return true;
    return std::memcmp(points.data(), other.points.data(),
                       sizeof(float) * 4 * points.rows()) == 0;
  }
};

}  // namespace ora
