#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "ora/metrics.hpp"
#include "ora/synth.hpp"
#include "test_support.hpp"

using namespace ora;
namespace fs = std::filesystem;

TEST_CASE("synth frames are deterministic per (seed, frame)") {
  SynthConfig config;
  config.num_frames = 1;
  config.rng_seed = 321;
  const SynthFrame a = synth_frame(config, 4);
  const SynthFrame b = synth_frame(config, 4);
  CHECK(a.cloud == b.cloud);
  REQUIRE(a.boxes.size() == b.boxes.size());
  for (std::size_t i = 0; i < a.boxes.size(); ++i) {
    CHECK(a.boxes[i].center == b.boxes[i].center);
    CHECK(a.boxes[i].yaw == b.boxes[i].yaw);
  }
  const SynthFrame c = synth_frame(config, 5);
  CHECK_FALSE(c.cloud == a.cloud);
}

TEST_CASE("every synthetic object owns its labelled points") {
  SynthConfig config;
  config.rng_seed = 17;
  config.objects_min = 2;
  config.objects_max = 5;
  for (std::uint64_t f = 0; f < 5; ++f) {
    const SynthFrame frame = synth_frame(config, f);
    REQUIRE(frame.boxes.size() == frame.labels.size());
    std::size_t total_object_points = 0;
    for (const BoundingBox3D& box : frame.boxes) {
      const auto inside = points_in_box(frame.cloud, box);
      CHECK(inside.size() >= 3);
      total_object_points += inside.size();

      // the label converts back to (approximately) the same box
      const BoundingBox3D round =
          camera_box_to_lidar(lidar_box_to_camera(box, frame.calib),
                              frame.calib);
      CHECK((round.center - box.center).norm() < 1e-9);
    }
    // disjointness: no point is claimed twice
    std::size_t claimed = 0;
    for (const BoundingBox3D& box : frame.boxes) {
      claimed += points_in_box(frame.cloud, box).size();
    }
    CHECK(claimed == total_object_points);
  }
}

TEST_CASE("uniform density mode hits the requested point range") {
  SynthConfig config;
  config.density = SynthConfig::Density::kUniformCount;
  config.points_min = 100;
  config.points_max = 300;
  config.classes = {"Pedestrian"};
  config.objects_min = config.objects_max = 3;
  config.range_max = 35.0;
  config.rng_seed = 5;
  const SynthFrame frame = synth_frame(config, 0);
  for (const BoundingBox3D& box : frame.boxes) {
    const auto inside = points_in_box(frame.cloud, box);
    CHECK(inside.size() >= 100);
    CHECK(inside.size() <= 300);
  }
}

TEST_CASE("inverse-range density decays with distance") {
  SynthConfig config;
  config.density = SynthConfig::Density::kInverseRange;
  config.density_constant = 2000.0;
  config.classes = {"Pedestrian"};
  config.objects_min = config.objects_max = 6;
  config.range_min = 8.0;
  config.range_max = 70.0;
  config.rng_seed = 23;
  int checked = 0;
  for (std::uint64_t f = 0; f < 4; ++f) {
    const SynthFrame frame = synth_frame(config, f);
    for (const BoundingBox3D& box : frame.boxes) {
      const double range = std::hypot(box.center.x(), box.center.y());
      const auto inside = points_in_box(frame.cloud, box);
      const double expected = config.density_constant / range;
      CHECK(std::abs(static_cast<double>(inside.size()) - expected) <= 1.0);
      ++checked;
    }
  }
  CHECK(checked >= 12);
}

TEST_CASE("synthetic labels carry devkit conventions") {
  SynthConfig config;
  config.rng_seed = 31;
  config.objects_min = config.objects_max = 4;
  const SynthFrame frame = synth_frame(config, 2);
  for (const RawLabel& label : frame.labels) {
    CHECK(label.bbox2d.left < label.bbox2d.right);
    CHECK(label.bbox2d.top < label.bbox2d.bottom);
    CHECK(label.truncation == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(label.occlusion == 0);
    // long-focal projection keeps even far objects ratable
    CHECK(assign_difficulty(label) == Difficulty::kEasy);
    CHECK(label.location.z() > 0.0);  // in front of the camera
  }
}

TEST_CASE("written dataset re-reads through the library parsers") {
  const fs::path root = ora::testing::scratch_dir("synth_io");
  SynthConfig config;
  config.num_frames = 3;
  config.rng_seed = 77;
  write_synth_dataset(config, root);

  const auto frames = read_split_file(root / "split.txt");
  REQUIRE(frames.size() == 3);
  for (const FrameId& frame : frames) {
    CloudParseStats stats;
    const PointCloud cloud =
        read_point_cloud_file(root / "velodyne" / (frame.name + ".bin"),
                              &stats);
    CHECK(cloud.size() > 0);
    CHECK(stats.clamped_reflectance == 0);
    const auto labels =
        read_label_file(root / "label_2" / (frame.name + ".txt"), false);
    const Calibration calib =
        read_calib_file(root / "calib" / (frame.name + ".txt"));
    for (const RawLabel& label : labels) {
      const BoundingBox3D box = camera_box_to_lidar(label, calib);
      CHECK(points_in_box(cloud, box).size() >= 3);
    }
  }

  // regenerating is byte-identical
  const fs::path again = ora::testing::scratch_dir("synth_io2");
  write_synth_dataset(config, again);
  for (const FrameId& frame : frames) {
    CHECK(read_text_file(root / "label_2" / (frame.name + ".txt")) ==
          read_text_file(again / "label_2" / (frame.name + ".txt")));
    const auto a = read_point_cloud_file(root / "velodyne" / (frame.name + ".bin"));
    const auto b = read_point_cloud_file(again / "velodyne" / (frame.name + ".bin"));
    CHECK(a == b);
  }
}
