#pragma once

// Shared test oracles. These deliberately re-derive geometry through
// different routes than the library (dot-product half-spaces instead of
// inverse rotation, Monte-Carlo volumes instead of polygon clipping) so
// agreement actually checks something.

#include <array>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ora/geometry.hpp"
#include "ora/point_cloud.hpp"
#include "ora/rng.hpp"

namespace ora::testing {

// Box axes straight from yaw; no rotation matrices involved.
struct BoxFrameOracle {
  Eigen::Vector3d center;
  Eigen::Vector3d axis_x, axis_y, axis_z;
  double half_l, half_w, half_h;

  explicit BoxFrameOracle(const BoundingBox3D& box)
      : center(box.center),
        axis_x(std::cos(box.yaw), std::sin(box.yaw), 0.0),
        axis_y(-std::sin(box.yaw), std::cos(box.yaw), 0.0),
        axis_z(0.0, 0.0, 1.0),
        half_l(box.length / 2),
        half_w(box.width / 2),
        half_h(box.height / 2) {}

  // The six half-space inequalities, closed with tolerance.
  bool contains(const Eigen::Vector3d& p, double tol = 1e-9) const {
    const Eigen::Vector3d d = p - center;
    return std::abs(d.dot(axis_x)) <= half_l + tol &&
           std::abs(d.dot(axis_y)) <= half_w + tol &&
           std::abs(d.dot(axis_z)) <= half_h + tol;
  }

  std::array<Eigen::Vector3d, 8> corners() const {
    std::array<Eigen::Vector3d, 8> out;
    int k = 0;
    for (double sz : {-1.0, 1.0}) {
      for (double sy : {-1.0, 1.0}) {
        for (double sx : {-1.0, 1.0}) {
          out[k++] = center + sx * half_l * axis_x + sy * half_w * axis_y +
                     sz * half_h * axis_z;
        }
      }
    }
    return out;
  }
};

// Monte-Carlo IoU over the union's axis-aligned bounding region.
inline double monte_carlo_iou(const BoundingBox3D& a, const BoundingBox3D& b,
                              int samples, SeededRng& rng) {
  const BoxFrameOracle oa(a), ob(b);
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(1e30);
  Eigen::Vector3d hi = Eigen::Vector3d::Constant(-1e30);
  for (const BoxFrameOracle* o : {&oa, &ob}) {
    for (const Eigen::Vector3d& c : o->corners()) {
      lo = lo.cwiseMin(c);
      hi = hi.cwiseMax(c);
    }
  }
  long in_either = 0, in_both = 0;
  for (int s = 0; s < samples; ++s) {
    const Eigen::Vector3d p(rng.uniform_double(lo.x(), hi.x()),
                            rng.uniform_double(lo.y(), hi.y()),
                            rng.uniform_double(lo.z(), hi.z()));
    const bool ia = oa.contains(p, 0.0);
    const bool ib = ob.contains(p, 0.0);
    if (ia || ib) ++in_either;
    if (ia && ib) ++in_both;
  }
  return in_either == 0 ? 0.0
                        : static_cast<double>(in_both) / in_either;
}

// Brute-force "left-most corner" azimuth, unwrapped around the centre
// direction (same convention as the spec, derived independently).
inline double max_corner_azimuth(const BoundingBox3D& box) {
  const BoxFrameOracle o(box);
  const double ref = std::atan2(box.center.y(), box.center.x());
  double best = -10.0;
  for (const Eigen::Vector3d& c : o.corners()) {
    double delta = std::atan2(c.y(), c.x()) - ref;
    while (delta > std::numbers::pi) delta -= 2 * std::numbers::pi;
    while (delta <= -std::numbers::pi) delta += 2 * std::numbers::pi;
    best = std::max(best, delta);
  }
  double anchor = ref + best;
  while (anchor > std::numbers::pi) anchor -= 2 * std::numbers::pi;
  while (anchor <= -std::numbers::pi) anchor += 2 * std::numbers::pi;
  return anchor;
}

inline BoundingBox3D random_box(SeededRng& rng, double center_span = 20.0) {
  BoundingBox3D box;
  box.center = Eigen::Vector3d(rng.uniform_double(-center_span, center_span),
                               rng.uniform_double(-center_span, center_span),
                               rng.uniform_double(-3.0, 3.0));
  box.length = rng.uniform_double(0.5, 5.0);
  box.width = rng.uniform_double(0.5, 3.0);
  box.height = rng.uniform_double(0.5, 3.0);
  box.yaw = normalize_angle(rng.uniform_double(-std::numbers::pi,
                                               std::numbers::pi));
  box.class_name = "Car";
  return box;
}

inline PointCloud random_cloud(SeededRng& rng, Eigen::Index n,
                               double span = 30.0) {
  PointCloud cloud;
  cloud.points.resize(n, 4);
  for (Eigen::Index i = 0; i < n; ++i) {
    cloud.points(i, 0) = static_cast<float>(rng.uniform_double(-span, span));
    cloud.points(i, 1) = static_cast<float>(rng.uniform_double(-span, span));
    cloud.points(i, 2) = static_cast<float>(rng.uniform_double(-5.0, 5.0));
    cloud.points(i, 3) = static_cast<float>(rng.uniform_double());
  }
  return cloud;
}

inline std::filesystem::path fixtures_dir() {
  return std::filesystem::path(ORA_TEST_FIXTURES_DIR);
}

// Fresh scratch directory under the build tree.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const std::filesystem::path dir =
      std::filesystem::temp_directory_path() / ("ora_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace ora::testing
