#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "ora/error.hpp"
#include "ora/point_cloud.hpp"

namespace ora {

/// One object row of a KITTI label or detection file, kept in the file's
/// own conventions: camera-rectified frame, bottom-face centre location,
/// (height, width, length) dimension order.
struct RawLabel {
  std::string class_name;
  double truncation = 0.0;  // fraction in [0, 1]
  int occlusion = 0;        // 0 visible .. 2 largely occluded, 3/-1 unknown
  double alpha = 0.0;       // observation angle, radians

  struct BBox2D {
    double left = 0.0, top = 0.0, right = 0.0, bottom = 0.0;  // pixels
    double height() const { return bottom - top; }
  } bbox2d;

  double height = 0.0, width = 0.0, length = 0.0;  // metres
  Eigen::Vector3d location{0.0, 0.0, 0.0};  // camera-rect frame, bottom-face centre
  double rotation_y = 0.0;                  // radians about camera y

  std::optional<double> score;  // present only in detection files

  bool is_dont_care() const { return class_name == "DontCare"; }
};

/// Projection and frame-change matrices from a KITTI calib file.
struct Calibration {
  Eigen::Matrix<double, 3, 4> projection_p2;
  Eigen::Matrix3d rect_r0;
  Eigen::Matrix<double, 3, 4> velo_to_cam;  // [R | t]

  Eigen::Matrix3d velo_to_cam_rotation() const {
    return velo_to_cam.leftCols<3>();
  }
  Eigen::Vector3d velo_to_cam_translation() const { return velo_to_cam.col(3); }
};

/// Determinant magnitude below which rect_r0 / velo-to-cam rotations are
/// rejected as singular.
inline constexpr double kCalibDeterminantFloor = 1e-6;

struct CloudParseStats {
  Eigen::Index clamped_reflectance = 0;  // finite values outside [0, 1]
};

// ---------------------------------------------------------------------------
// Velodyne binary clouds: little-endian float32 x4 per point, no header.

/// Decodes a raw velodyne buffer. Reflectance outside [0, 1] is clamped
/// (counted in stats); non-finite fields raise DataError naming the record.
PointCloud parse_point_cloud(std::span<const std::byte> bytes,
                             CloudParseStats* stats = nullptr);

/// Inverse of parse_point_cloud; bit-exact round trip for valid clouds.
std::vector<std::byte> write_point_cloud(const PointCloud& cloud);

// ---------------------------------------------------------------------------
// Label / detection text: 15 whitespace-separated fields per object row,
// 16 when a trailing confidence score is present.

std::vector<RawLabel> parse_label_file(std::string_view text, bool has_score);

/// Serializes labels one object per line; with_score appends the 16th field.
std::string write_label_file(const std::vector<RawLabel>& labels,
                             bool with_score);

// ---------------------------------------------------------------------------
// Calib text: "KEY: v1 v2 ..." lines; requires P2 (12 values), R0_rect (9)
// and Tr_velo_to_cam (12), all row-major. Unknown keys are ignored.

Calibration parse_calib_file(std::string_view text);

std::string write_calib_file(const Calibration& calib);

// ---------------------------------------------------------------------------
// Filesystem wrappers and dataset naming conventions.

PointCloud read_point_cloud_file(const std::filesystem::path& path,
                                 CloudParseStats* stats = nullptr);
void write_point_cloud_file(const std::filesystem::path& path,
                            const PointCloud& cloud);
std::vector<RawLabel> read_label_file(const std::filesystem::path& path,
                                      bool has_score);
void write_label_file(const std::filesystem::path& path,
                      const std::vector<RawLabel>& labels, bool with_score);
Calibration read_calib_file(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     const std::string& text);

/// Frame id of a dataset scene: "000123" on disk, 123 as a number (the
/// number seeds per-frame RNG substreams).
struct FrameId {
  std::string name;
  std::uint64_t number = 0;
};

/// 6-digit zero-padded frame name per dataset convention.
std::string frame_name(std::uint64_t number);

/// Reads a newline-separated list of frame ids; blank lines are skipped,
/// non-numeric tokens raise FormatError.
std::vector<FrameId> read_split_file(const std::filesystem::path& path);

FrameId parse_frame_id(std::string_view token);

}  // namespace ora
