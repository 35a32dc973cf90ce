#pragma once

#include <cstdint>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ora/geometry.hpp"
#include "ora/point_cloud.hpp"
#include "ora/rng.hpp"

namespace ora {

/// Threat-model cap on spoofed points per target object.
inline constexpr int kBudgetCap = 200;

/// Adversary parameters for one run.
struct AttackConfig {
  int budget = kBudgetCap;                  // spoofed points per object
  double sector_width = deg2rad(10.0);      // horizontal spoofing angle
  double displacement_min = 1.0;            // metres behind the original
  double displacement_max = 5.0;
  std::uint64_t rng_seed = 0;
  std::set<std::string> target_classes = {"Car", "Pedestrian", "Cyclist"};
  // The 200-point cap mirrors the physical capability bound; raising the
  // budget past it requires this explicit override.
  bool allow_budget_above_cap = false;

  /// Throws ConfigError on violated bounds.
  void validate() const;
};

/// One displaced return. `original`/`displaced` are full-precision; the
/// perturbed cloud itself is float32 (storage format), so direction
/// preservation is checked against these coordinates.
struct DisplacedPoint {
  Eigen::Index index = -1;   // into the scene cloud
  Eigen::Vector3d original{0.0, 0.0, 0.0};
  Eigen::Vector3d displaced{0.0, 0.0, 0.0};
  float reflectance = 0.0f;  // carried over unchanged
  double distance = 0.0;     // drawn from Uniform[min, max]
};

/// Output of the per-object attack: which returns moved where, and which
/// object returns were left alone. selected and untouched partition the
/// object's point set.
struct AttackTrace {
  int object_index = -1;
  std::string class_name;
  AzimuthSector sector{0.0, 0.0};
  std::vector<Eigen::Index> object_indices;     // ascending
  std::vector<Eigen::Index> selected_indices;   // selection order
  std::vector<DisplacedPoint> displaced_points; // parallel to selected
  std::vector<Eigen::Index> untouched_object_indices;  // ascending
};

/// Object points inside the box's spoofing sector: points_in_box
/// intersected with the sector filter. Deterministic, ascending.
std::vector<Eigen::Index> select_candidates(const PointCloud& cloud,
                                            const BoundingBox3D& box,
                                            double sector_width);

/// Uniform subset of min(budget, |candidates|) candidates, without
/// replacement, in selection order. Implemented as a full Fisher-Yates
/// shuffle followed by a prefix take, so for a fixed rng state the set for
/// a smaller budget is a prefix of the set for a larger one (nested
/// sweeps are exact, not statistical).
std::vector<Eigen::Index> sample_attack_points(
    const std::vector<Eigen::Index>& candidates, int budget, SeededRng& rng);

/// Runs the per-object attack: sector selection, uniform sampling under
/// the budget, and displacement of each sampled return by an independent
/// Uniform[displacement_min, displacement_max] distance along its ray.
AttackTrace build_attack_trace(const PointCloud& cloud,
                               const BoundingBox3D& box,
                               const AttackConfig& config, SeededRng& rng);

/// Perturbs one scene. Each target is attacked independently with its own
/// budget on an RNG substream keyed by (seed, frame_id, target index), so
/// the result does not depend on evaluation order. The output cloud has
/// the input's cardinality; rows outside the traces are bit-identical.
/// Targets whose point sets overlap raise DataError.
std::pair<PointCloud, std::vector<AttackTrace>> attack_scene(
    const PointCloud& cloud, const std::vector<BoundingBox3D>& targets,
    const AttackConfig& config, std::uint64_t frame_id = 0);

/// Manifest JSON for one attacked frame: config echo, per-object sector,
/// selected indices, original/displaced coordinates and drawn distances.
/// schema_version 1.
nlohmann::json attack_manifest(const std::string& frame_name,
                               const AttackConfig& config,
                               const std::vector<AttackTrace>& traces);

/// Validates a manifest against the schema and reconstructs the traces.
/// Throws FormatError on unknown schema versions or missing fields.
std::vector<AttackTrace> parse_attack_manifest(const nlohmann::json& manifest);

}  // namespace ora
