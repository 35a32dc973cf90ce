#include "ora/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ora/rng.hpp"

namespace ora {

namespace {

constexpr double kGroundZ = -1.73;  // sensor height above ground
constexpr double kImageWidth = 1242.0;
constexpr double kImageHeight = 1000.0;
constexpr double kFocal = 2000.0;

struct ClassDims {
  const char* name;
  double length, width, height;
};

// Rough dataset means per class; each draw jitters them by +/-10%.
constexpr ClassDims kClassDims[] = {
    {"Car", 3.9, 1.6, 1.56},
    {"Pedestrian", 0.8, 0.6, 1.76},
    {"Cyclist", 1.76, 0.6, 1.73},
};

const ClassDims& dims_for(const std::string& name) {
  for (const ClassDims& d : kClassDims) {
    if (name == d.name) return d;
  }
  throw ConfigError("unknown synthetic class '" + name + "'");
}

bool bev_overlaps(const BoundingBox3D& a, const BoundingBox3D& b,
                  double inflate) {
  BoundingBox3D ia = a, ib = b;
  ia.length *= inflate;
  ia.width *= inflate;
  ib.length *= inflate;
  ib.width *= inflate;
  // Same ground plane, so a positive 3D IoU means the footprints overlap.
  ia.center.z() = ib.center.z() = 0.0;
  ia.height = ib.height = 1.0;
  return iou_3d(ia, ib) > 0.0;
}

Eigen::Vector2d project(const Calibration& calib, const Eigen::Vector3d& rect) {
  const Eigen::Vector4d homo(rect.x(), rect.y(), rect.z(), 1.0);
  const Eigen::Vector3d img = calib.projection_p2 * homo;
  return {img.x() / img.z(), img.y() / img.z()};
}

// 2D bbox from projected 3D corners, clamped to the image; truncation is
// the clipped-away area fraction.
void fill_bbox2d(RawLabel& label, const BoundingBox3D& box,
                 const Calibration& calib) {
  const Eigen::Matrix<double, 8, 3> corners = box_corners(box);
  double lo_u = 1e30, hi_u = -1e30, lo_v = 1e30, hi_v = -1e30;
  for (int k = 0; k < 8; ++k) {
    const Eigen::Vector3d velo = corners.row(k).transpose();
    const Eigen::Vector3d rect =
        calib.rect_r0 * (calib.velo_to_cam_rotation() * velo +
                         calib.velo_to_cam_translation());
    const Eigen::Vector2d uv = project(calib, rect);
    lo_u = std::min(lo_u, uv.x());
    hi_u = std::max(hi_u, uv.x());
    lo_v = std::min(lo_v, uv.y());
    hi_v = std::max(hi_v, uv.y());
  }
  const double full = (hi_u - lo_u) * (hi_v - lo_v);
  label.bbox2d.left = std::clamp(lo_u, 0.0, kImageWidth);
  label.bbox2d.right = std::clamp(hi_u, 0.0, kImageWidth);
  label.bbox2d.top = std::clamp(lo_v, 0.0, kImageHeight);
  label.bbox2d.bottom = std::clamp(hi_v, 0.0, kImageHeight);
  const double visible = (label.bbox2d.right - label.bbox2d.left) *
                         (label.bbox2d.bottom - label.bbox2d.top);
  label.truncation =
      full > 0.0 ? std::clamp(1.0 - visible / full, 0.0, 1.0) : 0.0;
}

void append_point(PointCloud::Storage& rows, Eigen::Index& used,
                  const Eigen::Vector3d& p, float reflectance) {
  rows(used, 0) = static_cast<float>(p.x());
  rows(used, 1) = static_cast<float>(p.y());
  rows(used, 2) = static_cast<float>(p.z());
  rows(used, 3) = reflectance;
  ++used;
}

}  // namespace

void SynthConfig::validate() const {
  if (num_frames < 1) throw ConfigError("synth num_frames must be >= 1");
  if (objects_min < 0 || objects_max < objects_min) {
    throw ConfigError("synth object count range invalid");
  }
  if (!(range_min >= 5.0 && range_max > range_min)) {
    throw ConfigError("synth range requires 5 <= min < max");
  }
  if (!(cone_half_angle > 0.0 && cone_half_angle <= deg2rad(15.0))) {
    throw ConfigError("synth cone half-angle must lie in (0, 15] degrees");
  }
  if (density_constant <= 0.0) {
    throw ConfigError("synth density_constant must be > 0");
  }
  if (points_min < 1 || points_max < points_min) {
    throw ConfigError("synth point count range invalid");
  }
  if (background_points < 0) {
    throw ConfigError("synth background_points must be >= 0");
  }
  if (classes.empty()) throw ConfigError("synth class list is empty");
  for (const std::string& c : classes) dims_for(c);
}

Calibration synth_calibration() {
  Calibration calib;
  calib.projection_p2.setZero();
  calib.projection_p2(0, 0) = kFocal;
  calib.projection_p2(0, 2) = kImageWidth / 2;
  calib.projection_p2(1, 1) = kFocal;
  calib.projection_p2(1, 2) = kImageHeight / 2;
  calib.projection_p2(2, 2) = 1.0;
  calib.rect_r0.setIdentity();
  // velodyne (x fwd, y left, z up) -> camera (x right, y down, z fwd)
  calib.velo_to_cam.setZero();
  calib.velo_to_cam(0, 1) = -1.0;
  calib.velo_to_cam(1, 2) = -1.0;
  calib.velo_to_cam(2, 0) = 1.0;
  return calib;
}

SynthFrame synth_frame(const SynthConfig& config, std::uint64_t frame_number) {
  config.validate();
  SeededRng rng = SeededRng::substream(config.rng_seed, frame_number, 0);

  SynthFrame frame;
  frame.calib = synth_calibration();

  const int num_objects =
      config.objects_min +
      static_cast<int>(rng.uniform_index(
          static_cast<std::uint64_t>(config.objects_max - config.objects_min) +
          1));

  // Place objects with non-overlapping (inflated) footprints.
  for (int i = 0; i < num_objects; ++i) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      const ClassDims& proto = dims_for(
          config.classes[rng.uniform_index(config.classes.size())]);
      BoundingBox3D box;
      box.class_name = proto.name;
      box.length = proto.length * rng.uniform_double(0.9, 1.1);
      box.width = proto.width * rng.uniform_double(0.9, 1.1);
      box.height = proto.height * rng.uniform_double(0.9, 1.1);
      const double range = rng.uniform_double(config.range_min,
                                              config.range_max);
      const double margin = std::atan2(std::hypot(box.length, box.width) / 2,
                                       range);
      const double az_limit = config.cone_half_angle - margin;
      if (az_limit <= 0.0) continue;  // too close to fit inside the cone
      const double az = rng.uniform_double(-az_limit, az_limit);
      box.center = Eigen::Vector3d(range * std::cos(az), range * std::sin(az),
                                   kGroundZ + box.height / 2);
      box.yaw = rng.uniform_double(-std::numbers::pi, std::numbers::pi);
      box.yaw = normalize_angle(box.yaw);

      const bool collides = std::any_of(
          frame.boxes.begin(), frame.boxes.end(),
          [&box](const BoundingBox3D& other) {
            return bev_overlaps(box, other, 1.15);
          });
      if (!collides) {
        frame.boxes.push_back(std::move(box));
        break;
      }
    }
  }

  // Per-object point budgets.
  std::vector<int> counts;
  counts.reserve(frame.boxes.size());
  for (const BoundingBox3D& box : frame.boxes) {
    if (config.density == SynthConfig::Density::kInverseRange) {
      const double range = std::hypot(box.center.x(), box.center.y());
      counts.push_back(std::max<int>(
          3, static_cast<int>(std::llround(config.density_constant / range))));
    } else {
      counts.push_back(config.points_min +
                       static_cast<int>(rng.uniform_index(
                           static_cast<std::uint64_t>(config.points_max -
                                                      config.points_min) +
                           1)));
    }
  }

  Eigen::Index total = config.background_points;
  for (int c : counts) total += c;
  frame.cloud.points.resize(total, 4);
  Eigen::Index used = 0;

  // Ground returns, kept out of every (slightly inflated) object box.
  for (int i = 0; i < config.background_points; ++i) {
    for (int attempt = 0; attempt < 100; ++attempt) {
      const double az = rng.uniform_double(-config.cone_half_angle,
                                           config.cone_half_angle);
      const double range = rng.uniform_double(3.0, config.range_max + 10.0);
      const Eigen::Vector3d p(range * std::cos(az), range * std::sin(az),
                              kGroundZ + rng.uniform_double(-0.05, 0.05));
      const bool inside = std::any_of(
          frame.boxes.begin(), frame.boxes.end(),
          [&p](const BoundingBox3D& box) {
            BoundingBox3D inflated = box;
            inflated.length *= 1.05;
            inflated.width *= 1.05;
            inflated.height *= 1.05;
            return point_in_box(p, inflated);
          });
      if (!inside) {
        append_point(frame.cloud.points, used, p,
                     static_cast<float>(rng.uniform_double()));
        break;
      }
    }
  }

  // Object returns, uniform inside the box with a 1% face margin.
  for (std::size_t b = 0; b < frame.boxes.size(); ++b) {
    const BoundingBox3D& box = frame.boxes[b];
    const Eigen::Matrix2d rot = Eigen::Rotation2Dd(box.yaw).toRotationMatrix();
    for (int i = 0; i < counts[b]; ++i) {
      const Eigen::Vector2d local(
          rng.uniform_double(-0.49, 0.49) * box.length,
          rng.uniform_double(-0.49, 0.49) * box.width);
      const Eigen::Vector2d xy = rot * local + box.center.head<2>();
      const Eigen::Vector3d p(
          xy.x(), xy.y(),
          box.center.z() + rng.uniform_double(-0.49, 0.49) * box.height);
      append_point(frame.cloud.points, used, p,
                   static_cast<float>(rng.uniform_double()));
    }
  }
  frame.cloud.points.conservativeResize(used, 4);

  // Camera-frame labels for the same objects.
  for (const BoundingBox3D& box : frame.boxes) {
    RawLabel label = lidar_box_to_camera(box, frame.calib);
    label.occlusion = 0;
    fill_bbox2d(label, box, frame.calib);
    frame.labels.push_back(std::move(label));
  }
  return frame;
}

void write_synth_dataset(const SynthConfig& config,
                         const std::filesystem::path& root) {
  config.validate();
  namespace fs = std::filesystem;
  fs::create_directories(root / "velodyne");
  fs::create_directories(root / "label_2");
  fs::create_directories(root / "calib");

  std::string split;
  for (int f = 0; f < config.num_frames; ++f) {
    const SynthFrame frame = synth_frame(config, f);
    const std::string name = frame_name(f);
    write_point_cloud_file(root / "velodyne" / (name + ".bin"), frame.cloud);
    write_label_file(root / "label_2" / (name + ".txt"), frame.labels,
                     /*with_score=*/false);
    write_text_file(root / "calib" / (name + ".txt"),
                    write_calib_file(frame.calib));
    split += name + "\n";
  }
  write_text_file(root / "split.txt", split);
}

}  // namespace ora
