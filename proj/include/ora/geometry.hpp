#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ora/error.hpp"
#include "ora/kitti_io.hpp"
#include "ora/point_cloud.hpp"

namespace ora {

/// Oriented 3D box in the velodyne frame.
///
/// center is the geometric centre of the cuboid; dims follow the box frame:
/// length along local x (heading), width along local y, height along z.
/// yaw rotates the box frame about +z and is normalized to (-pi, pi].
struct BoundingBox3D {
  Eigen::Vector3d center{0.0, 0.0, 0.0};
  double length = 0.0, width = 0.0, height = 0.0;  // metres, strictly positive
  double yaw = 0.0;
  std::string class_name;

  double volume() const { return length * width * height; }
};

/// Horizontal angular window the spoofer can reach. The window spans
/// [anchor_azimuth - width, anchor_azimuth]; membership is wrap-safe
/// across the +/-pi seam.
struct AzimuthSector {
  double anchor_azimuth = 0.0;  // radians, (-pi, pi]
  double width = 0.0;           // radians, (0, pi)

  bool contains(double azimuth) const;
};

/// Wraps an angle into (-pi, pi].
double normalize_angle(double angle);

double deg2rad(double degrees);

/// Horizontal angle of a point in the velodyne frame, (-pi, pi].
/// +x is azimuth 0, +y (left) is +pi/2. Throws GeometryError when the
/// point sits on the z-axis.
double azimuth(const Eigen::Vector3d& point);

/// The 8 corners of a box. Row k carries the sign pattern
///   x: (k & 1) ? +length/2 : -length/2
///   y: (k & 2) ? +width/2  : -width/2
///   z: (k & 4) ? +height/2 : -height/2
/// in the box frame, then rotated by yaw and translated to the centre.
Eigen::Matrix<double, 8, 3> box_corners(const BoundingBox3D& box);

/// Indices of cloud points inside the closed box (boundary tolerance 1e-9
/// on the half-dimension comparison, after inverse-rotating into the box
/// frame). Ascending order.
std::vector<Eigen::Index> points_in_box(const PointCloud& cloud,
                                        const BoundingBox3D& box);

/// Same closed-box test for a single point.
bool point_in_box(const Eigen::Vector3d& point, const BoundingBox3D& box);

/// Spoofing window anchored at the box's left-most corner. In the velodyne
/// frame +y is left, so the anchor is the corner of maximum azimuth
/// (evaluated wrap-safely by unwrapping corner azimuths around the centre
/// direction) and the window extends from there across the box toward
/// smaller azimuths. Throws GeometryError when the box footprint covers
/// the sensor origin (no left-most direction exists).
AzimuthSector spoofing_sector(const BoundingBox3D& box, double width);

/// Subset of `indices` whose points' azimuths lie inside the sector.
/// Points on the z-axis have no azimuth and are never in a sector.
std::vector<Eigen::Index> filter_by_sector(const PointCloud& cloud,
                                           const std::vector<Eigen::Index>& indices,
                                           const AzimuthSector& sector);

/// Pushes a point away from the sensor along its own ray: the result is
/// point * (range + distance) / range, so azimuth and elevation are
/// preserved and range grows by exactly `distance`.
Eigen::Vector3d displace_along_ray(const Eigen::Vector3d& point,
                                   double distance);

/// Volume IoU of two oriented boxes: bird's-eye-view convex polygon
/// intersection (Sutherland-Hodgman clipping, collinearity tolerance 1e-9,
/// slivers below 1e-12 m^2 treated as empty) times the vertical overlap.
double iou_3d(const BoundingBox3D& a, const BoundingBox3D& b);

/// BEV footprint corner polygon (4 vertices, counter-clockwise).
std::vector<Eigen::Vector2d> bev_footprint(const BoundingBox3D& box);

/// Converts a camera-frame label to a velodyne-frame box:
///   bottom_velo = inv(velo_to_cam) . inv(R0_rect) . location
///   centre      = bottom_velo + (0, 0, height/2)
///   yaw         = -rotation_y - pi/2   (camera ry to velodyne yaw)
/// Throws DataError on DontCare labels or singular calibrations.
BoundingBox3D camera_box_to_lidar(const RawLabel& label,
                                  const Calibration& calib);

/// Inverse of camera_box_to_lidar for label emission: fills the geometric
/// fields (dimensions, location, rotation_y, alpha) of a RawLabel from a
/// velodyne-frame box. 2D bbox is left to the caller.
RawLabel lidar_box_to_camera(const BoundingBox3D& box,
                             const Calibration& calib);

}  // namespace ora
