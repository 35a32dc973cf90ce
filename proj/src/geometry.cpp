#include "ora/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace ora {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kBoxBoundaryTol = 1e-9;   // metres, closed-box membership
constexpr double kClipCollinearTol = 1e-9; // metres, signed distance to edge
constexpr double kSliverArea = 1e-12;      // m^2, degenerate intersections

Eigen::Matrix2d yaw_rotation(double yaw) {
  return Eigen::Rotation2Dd(yaw).toRotationMatrix();
}

void check_box(const BoundingBox3D& box) {
  if (!(box.length > 0.0 && box.width > 0.0 && box.height > 0.0)) {
    throw DataError("box dimensions must be strictly positive");
  }
}

// Signed area of the triangle (a, b, p); > 0 when p is left of a->b.
double cross2(const Eigen::Vector2d& a, const Eigen::Vector2d& b,
              const Eigen::Vector2d& p) {
  return (b.x() - a.x()) * (p.y() - a.y()) -
         (b.y() - a.y()) * (p.x() - a.x());
}

double polygon_area(const std::vector<Eigen::Vector2d>& poly) {
  double twice = 0.0;
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Eigen::Vector2d& p = poly[i];
    const Eigen::Vector2d& q = poly[(i + 1) % poly.size()];
    twice += p.x() * q.y() - q.x() * p.y();
  }
  return std::abs(twice) * 0.5;
}

// Clips a convex polygon against the half-plane left of edge a->b.
// Points within kClipCollinearTol of the edge line count as inside.
std::vector<Eigen::Vector2d> clip_by_edge(
    const std::vector<Eigen::Vector2d>& poly, const Eigen::Vector2d& a,
    const Eigen::Vector2d& b) {
  std::vector<Eigen::Vector2d> out;
  out.reserve(poly.size() + 1);
  const double edge_len = (b - a).norm();
  const double tol = kClipCollinearTol * std::max(edge_len, 1.0);
  for (std::size_t i = 0; i < poly.size(); ++i) {
    const Eigen::Vector2d& p = poly[i];
    const Eigen::Vector2d& q = poly[(i + 1) % poly.size()];
    const double dp = cross2(a, b, p);
    const double dq = cross2(a, b, q);
    const bool p_in = dp >= -tol;
    const bool q_in = dq >= -tol;
    if (p_in) out.push_back(p);
    if (p_in != q_in) {
      const double denom = dp - dq;
      if (std::abs(denom) > 0.0) {
        const double t = dp / denom;
        out.push_back(p + t * (q - p));
      }
    }
  }
  return out;
}

double bev_intersection_area(const BoundingBox3D& a, const BoundingBox3D& b) {
  std::vector<Eigen::Vector2d> poly = bev_footprint(a);
  const std::vector<Eigen::Vector2d> clip = bev_footprint(b);
  for (std::size_t i = 0; i < clip.size() && poly.size() >= 3; ++i) {
    poly = clip_by_edge(poly, clip[i], clip[(i + 1) % clip.size()]);
  }
  if (poly.size() < 3) return 0.0;
  const double area = polygon_area(poly);
  return area < kSliverArea ? 0.0 : area;
}

}  // namespace

double normalize_angle(double angle) {
  angle = std::fmod(angle, 2.0 * kPi);
  if (angle <= -kPi) {
    angle += 2.0 * kPi;
  } else if (angle > kPi) {
    angle -= 2.0 * kPi;
  }
  return angle;
}

double deg2rad(double degrees) { return degrees * kPi / 180.0; }

double azimuth(const Eigen::Vector3d& point) {
  if (point.x() == 0.0 && point.y() == 0.0) {
    throw GeometryError("point on the z-axis has no azimuth");
  }
  const double a = std::atan2(point.y(), point.x());
  return a <= -kPi ? kPi : a;
}

bool AzimuthSector::contains(double az) const {
  // Closed window; 1e-12 rad slack keeps separately-computed boundary
  // angles (anchor - width vs. a point exactly on the low edge) inside.
  const double delta = normalize_angle(anchor_azimuth - az);
  return delta >= -1e-12 && delta <= width + 1e-12;
}

Eigen::Matrix<double, 8, 3> box_corners(const BoundingBox3D& box) {
  check_box(box);
  const Eigen::Matrix2d rot = yaw_rotation(box.yaw);
  Eigen::Matrix<double, 8, 3> corners;
  for (int k = 0; k < 8; ++k) {
    const Eigen::Vector2d local((k & 1) ? box.length / 2 : -box.length / 2,
                                (k & 2) ? box.width / 2 : -box.width / 2);
    const Eigen::Vector2d xy = rot * local + box.center.head<2>();
    corners(k, 0) = xy.x();
    corners(k, 1) = xy.y();
    corners(k, 2) = box.center.z() +
                    ((k & 4) ? box.height / 2 : -box.height / 2);
  }
  return corners;
}

bool point_in_box(const Eigen::Vector3d& point, const BoundingBox3D& box) {
  const Eigen::Vector2d local =
      yaw_rotation(-box.yaw) * (point.head<2>() - box.center.head<2>());
  return std::abs(local.x()) <= box.length / 2 + kBoxBoundaryTol &&
         std::abs(local.y()) <= box.width / 2 + kBoxBoundaryTol &&
         std::abs(point.z() - box.center.z()) <=
             box.height / 2 + kBoxBoundaryTol;
}

std::vector<Eigen::Index> points_in_box(const PointCloud& cloud,
                                        const BoundingBox3D& box) {
  check_box(box);
  std::vector<Eigen::Index> inside;
  for (Eigen::Index i = 0; i < cloud.size(); ++i) {
    if (point_in_box(cloud.xyz(i), box)) inside.push_back(i);
  }
  return inside;
}

AzimuthSector spoofing_sector(const BoundingBox3D& box, double width) {
  check_box(box);
  if (!(width > 0.0 && width < kPi)) {
    throw DataError("sector width must lie in (0, pi)");
  }
  // A footprint covering the sensor origin surrounds the z-axis: corner
  // directions then span the full circle and no left-most corner exists.
  if (point_in_box(Eigen::Vector3d(0.0, 0.0, box.center.z()), box)) {
    throw GeometryError("box footprint contains the sensor origin");
  }

  // Corner azimuths of a footprint that excludes the origin all lie within
  // an open half-circle of the centre direction, so unwrapping relative to
  // the centre makes the maximum well defined across the +/-pi seam.
  const double ref = azimuth(box.center);
  const Eigen::Matrix<double, 8, 3> corners = box_corners(box);
  double max_delta = -kPi;
  for (int k = 0; k < 8; ++k) {
    const double az = azimuth(corners.row(k).transpose());
    max_delta = std::max(max_delta, normalize_angle(az - ref));
  }
  return AzimuthSector{normalize_angle(ref + max_delta), width};
}

std::vector<Eigen::Index> filter_by_sector(
    const PointCloud& cloud, const std::vector<Eigen::Index>& indices,
    const AzimuthSector& sector) {
  std::vector<Eigen::Index> kept;
  kept.reserve(indices.size());
  for (Eigen::Index i : indices) {
    const Eigen::Vector3d p = cloud.xyz(i);
    if (p.x() == 0.0 && p.y() == 0.0) continue;
    if (sector.contains(azimuth(p))) kept.push_back(i);
  }
  return kept;
}

Eigen::Vector3d displace_along_ray(const Eigen::Vector3d& point,
                                   double distance) {
  if (distance < 0.0) throw DataError("displacement distance must be >= 0");
  const double range = point.norm();
  if (range == 0.0) {
    throw GeometryError("cannot displace a zero-norm point along its ray");
  }
  return point * ((range + distance) / range);
}

std::vector<Eigen::Vector2d> bev_footprint(const BoundingBox3D& box) {
  const Eigen::Matrix2d rot = yaw_rotation(box.yaw);
  const double hl = box.length / 2;
  const double hw = box.width / 2;
  // Counter-clockwise in the box frame.
  const Eigen::Vector2d local[4] = {{-hl, -hw}, {hl, -hw}, {hl, hw}, {-hl, hw}};
  std::vector<Eigen::Vector2d> corners(4);
  for (int i = 0; i < 4; ++i) {
    corners[i] = rot * local[i] + box.center.head<2>();
  }
  return corners;
}

double iou_3d(const BoundingBox3D& a, const BoundingBox3D& b) {
  check_box(a);
  check_box(b);
  const double dz = std::min(a.center.z() + a.height / 2,
                             b.center.z() + b.height / 2) -
                    std::max(a.center.z() - a.height / 2,
                             b.center.z() - b.height / 2);
  if (dz <= 0.0) return 0.0;
  const double inter_area = bev_intersection_area(a, b);
  if (inter_area <= 0.0) return 0.0;
  const double inter = inter_area * dz;
  const double uni = a.volume() + b.volume() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

BoundingBox3D camera_box_to_lidar(const RawLabel& label,
                                  const Calibration& calib) {
  if (label.is_dont_care()) {
    throw DataError("DontCare labels carry no 3D box");
  }
  if (!(label.height > 0.0 && label.width > 0.0 && label.length > 0.0)) {
    throw DataError("label dimensions must be strictly positive");
  }
  if (std::abs(calib.rect_r0.determinant()) < kCalibDeterminantFloor ||
      std::abs(calib.velo_to_cam_rotation().determinant()) <
          kCalibDeterminantFloor) {
    throw DataError("singular calibration");
  }

  // Label location lives in the rectified camera frame; undo rectification,
  // then undo the velodyne-to-camera transform.
  const Eigen::Vector3d cam =
      calib.rect_r0.partialPivLu().solve(label.location);
  const Eigen::Vector3d bottom_velo =
      calib.velo_to_cam_rotation().partialPivLu().solve(
          cam - calib.velo_to_cam_translation());

  BoundingBox3D box;
  box.center = bottom_velo + Eigen::Vector3d(0.0, 0.0, label.height / 2);
  box.length = label.length;
  box.width = label.width;
  box.height = label.height;
  box.yaw = normalize_angle(-label.rotation_y - kPi / 2);
  box.class_name = label.class_name;
  return box;
}

RawLabel lidar_box_to_camera(const BoundingBox3D& box,
                             const Calibration& calib) {
  check_box(box);
  const Eigen::Vector3d bottom_velo =
      box.center - Eigen::Vector3d(0.0, 0.0, box.height / 2);
  const Eigen::Vector3d cam =
      calib.velo_to_cam_rotation() * bottom_velo +
      calib.velo_to_cam_translation();
  RawLabel label;
  label.class_name = box.class_name;
  label.location = calib.rect_r0 * cam;
  label.height = box.height;
  label.width = box.width;
  label.length = box.length;
  label.rotation_y = normalize_angle(-box.yaw - kPi / 2);
  // Observation angle: heading relative to the ray through the object.
  label.alpha = normalize_angle(
      label.rotation_y - std::atan2(label.location.x(), label.location.z()));
  return label;
}

}  // namespace ora
