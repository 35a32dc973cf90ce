#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ora/geometry.hpp"
#include "ora/kitti_io.hpp"
#include "ora/point_cloud.hpp"

namespace ora {

/// Synthetic-corpus generator: random cars / pedestrians / cyclists in a
/// forward cone with point densities that fall off with range, written in
/// dataset layout so attack and evaluation runs need no external data.
struct SynthConfig {
  int num_frames = 50;
  int objects_min = 1, objects_max = 6;
  std::vector<std::string> classes = {"Car", "Pedestrian", "Cyclist"};
  double range_min = 8.0, range_max = 60.0;  // metres from the sensor
  double cone_half_angle = deg2rad(12.0);    // keeps projections in-image

  enum class Density {
    kInverseRange,   // points per object ~ density_constant / range
    kUniformCount,   // points per object ~ U[points_min, points_max]
  };
  Density density = Density::kInverseRange;
  double density_constant = 2000.0;
  int points_min = 100, points_max = 300;

  int background_points = 2000;  // ground returns outside the objects
  std::uint64_t rng_seed = 0;

  void validate() const;
};

struct SynthFrame {
  PointCloud cloud;
  std::vector<RawLabel> labels;          // camera-frame, devkit conventions
  std::vector<BoundingBox3D> boxes;      // same objects, velodyne frame
  Calibration calib;
};

/// Fixed calibration used for every synthetic frame: pinhole P2 with a
/// long focal length (keeps far objects above the devkit 25 px difficulty
/// floor), identity rectification, axis-permutation velodyne-to-camera.
Calibration synth_calibration();

/// Deterministic frame content drawn from substream(seed, frame_number, 0).
SynthFrame synth_frame(const SynthConfig& config, std::uint64_t frame_number);

/// Writes velodyne/, label_2/, calib/ and split.txt under root.
void write_synth_dataset(const SynthConfig& config,
                         const std::filesystem::path& root);

}  // namespace ora
