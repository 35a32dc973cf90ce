#include "ora/attack.hpp"

#include <algorithm>
#include <numbers>
#include <unordered_set>

#include <nlohmann/json.hpp>

namespace ora {

void AttackConfig::validate() const {
  if (budget < 0) throw ConfigError("budget must be >= 0");
  if (budget > kBudgetCap && !allow_budget_above_cap) {
    throw ConfigError("budget " + std::to_string(budget) +
                      " exceeds the 200-point cap; pass the unsafe override "
                      "to exceed it");
  }
  if (!(sector_width > 0.0 && sector_width < std::numbers::pi)) {
    throw ConfigError("sector width must lie in (0, pi)");
  }
  if (!(displacement_min >= 0.0 && displacement_max >= displacement_min)) {
    throw ConfigError("displacement range requires 0 <= min <= max");
  }
  if (target_classes.empty()) {
    throw ConfigError("target class set is empty");
  }
}

std::vector<Eigen::Index> select_candidates(const PointCloud& cloud,
                                            const BoundingBox3D& box,
                                            double sector_width) {
  const std::vector<Eigen::Index> object = points_in_box(cloud, box);
  const AzimuthSector sector = spoofing_sector(box, sector_width);
  return filter_by_sector(cloud, object, sector);
}

std::vector<Eigen::Index> sample_attack_points(
    const std::vector<Eigen::Index>& candidates, int budget, SeededRng& rng) {
  if (budget < 0) throw ConfigError("budget must be >= 0");
  std::vector<Eigen::Index> perm = candidates;
  rng.shuffle(perm);
  const std::size_t take =
      std::min<std::size_t>(perm.size(), static_cast<std::size_t>(budget));
  perm.resize(take);
  return perm;
}

AttackTrace build_attack_trace(const PointCloud& cloud,
                               const BoundingBox3D& box,
                               const AttackConfig& config, SeededRng& rng) {
  config.validate();
  if (!config.target_classes.contains(box.class_name)) {
    throw ConfigError("box class '" + box.class_name +
                      "' is not in the configured target classes");
  }

  AttackTrace trace;
  trace.class_name = box.class_name;
  trace.object_indices = points_in_box(cloud, box);
  trace.sector = spoofing_sector(box, config.sector_width);

  const std::vector<Eigen::Index> candidates =
      filter_by_sector(cloud, trace.object_indices, trace.sector);
  trace.selected_indices = sample_attack_points(candidates, config.budget, rng);

  trace.displaced_points.reserve(trace.selected_indices.size());
  for (Eigen::Index idx : trace.selected_indices) {
    DisplacedPoint moved;
    moved.index = idx;
    moved.original = cloud.xyz(idx);
    moved.reflectance = cloud.reflectance(idx);
    moved.distance =
        rng.uniform_double(config.displacement_min, config.displacement_max);
    moved.displaced = displace_along_ray(moved.original, moved.distance);
    trace.displaced_points.push_back(std::move(moved));
  }

  const std::unordered_set<Eigen::Index> selected(
      trace.selected_indices.begin(), trace.selected_indices.end());
  for (Eigen::Index idx : trace.object_indices) {
    if (!selected.contains(idx)) {
      trace.untouched_object_indices.push_back(idx);
    }
  }
  return trace;
}

std::pair<PointCloud, std::vector<AttackTrace>> attack_scene(
    const PointCloud& cloud, const std::vector<BoundingBox3D>& targets,
    const AttackConfig& config, std::uint64_t frame_id) {
  config.validate();

  // Targets must own disjoint point sets, otherwise "the object's points"
  // is ambiguous.
  std::unordered_set<Eigen::Index> claimed;
  std::vector<std::vector<Eigen::Index>> object_points(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    object_points[t] = points_in_box(cloud, targets[t]);
    for (Eigen::Index idx : object_points[t]) {
      if (!claimed.insert(idx).second) {
        throw DataError("targets share point " + std::to_string(idx) +
                        "; overlapping target boxes are ambiguous");
      }
    }
  }

  PointCloud out = cloud;
  std::vector<AttackTrace> traces;
  traces.reserve(targets.size());
  for (std::size_t t = 0; t < targets.size(); ++t) {
    SeededRng rng = SeededRng::substream(config.rng_seed, frame_id,
                                         static_cast<std::uint64_t>(t));
    AttackTrace trace = build_attack_trace(cloud, targets[t], config, rng);
    trace.object_index = static_cast<int>(t);
    for (const DisplacedPoint& moved : trace.displaced_points) {
      out.points(moved.index, 0) = static_cast<float>(moved.displaced.x());
      out.points(moved.index, 1) = static_cast<float>(moved.displaced.y());
      out.points(moved.index, 2) = static_cast<float>(moved.displaced.z());
      // reflectance row untouched: spoofed return keeps the original value
    }
    traces.push_back(std::move(trace));
  }
  return {std::move(out), std::move(traces)};
}

namespace {

nlohmann::json index_array(const std::vector<Eigen::Index>& indices) {
  nlohmann::json arr = nlohmann::json::array();
  for (Eigen::Index i : indices) arr.push_back(static_cast<std::int64_t>(i));
  return arr;
}

std::vector<Eigen::Index> parse_index_array(const nlohmann::json& arr,
                                            const char* what) {
  if (!arr.is_array()) {
    throw FormatError(std::string("manifest field '") + what +
                      "' is not an array");
  }
  std::vector<Eigen::Index> out;
  out.reserve(arr.size());
  for (const auto& v : arr) {
    if (!v.is_number_integer()) {
      throw FormatError(std::string("manifest field '") + what +
                        "' holds a non-integer");
    }
    out.push_back(v.get<std::int64_t>());
  }
  return out;
}

}  // namespace

nlohmann::json attack_manifest(const std::string& frame_name,
                               const AttackConfig& config,
                               const std::vector<AttackTrace>& traces) {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["frame_id"] = frame_name;
  doc["config"] = {
      {"budget", config.budget},
      {"sector_width_rad", config.sector_width},
      {"displacement_min_m", config.displacement_min},
      {"displacement_max_m", config.displacement_max},
      {"rng_seed", config.rng_seed},
      {"rng_algorithm", "mt19937_64 + splitmix64 substreams"},
      {"target_classes",
       std::vector<std::string>(config.target_classes.begin(),
                                config.target_classes.end())},
      {"anchor_convention", "max-azimuth corner (velodyne +y = left)"},
  };
  // Displaced returns are not checked against scene geometry behind the
  // object (ground, walls); consumers should know the model stops there.
  doc["notes"] = {{"scene_geometry_collision_check", false}};

  nlohmann::json objects = nlohmann::json::array();
  for (const AttackTrace& trace : traces) {
    nlohmann::json obj;
    obj["object_index"] = trace.object_index;
    obj["class"] = trace.class_name;
    obj["sector"] = {{"anchor_azimuth_rad", trace.sector.anchor_azimuth},
                     {"width_rad", trace.sector.width}};
    obj["object_indices"] = index_array(trace.object_indices);
    obj["selected_indices"] = index_array(trace.selected_indices);
    obj["untouched_indices"] = index_array(trace.untouched_object_indices);
    nlohmann::json moves = nlohmann::json::array();
    for (const DisplacedPoint& m : trace.displaced_points) {
      moves.push_back({
          {"index", static_cast<std::int64_t>(m.index)},
          {"original", {m.original.x(), m.original.y(), m.original.z()}},
          {"displaced", {m.displaced.x(), m.displaced.y(), m.displaced.z()}},
          {"reflectance", m.reflectance},
          {"distance_m", m.distance},
      });
    }
    obj["displacements"] = std::move(moves);
    objects.push_back(std::move(obj));
  }
  doc["objects"] = std::move(objects);
  return doc;
}

std::vector<AttackTrace> parse_attack_manifest(const nlohmann::json& doc) {
  if (!doc.is_object() || !doc.contains("schema_version")) {
    throw FormatError("manifest has no schema_version");
  }
  if (doc["schema_version"] != 1) {
    throw FormatError("unsupported manifest schema_version");
  }
  for (const char* key : {"frame_id", "config", "objects"}) {
    if (!doc.contains(key)) {
      throw FormatError(std::string("manifest is missing '") + key + "'");
    }
  }
  std::vector<AttackTrace> traces;
  for (const auto& obj : doc["objects"]) {
    AttackTrace trace;
    trace.object_index = obj.at("object_index").get<int>();
    trace.class_name = obj.at("class").get<std::string>();
    trace.sector.anchor_azimuth =
        obj.at("sector").at("anchor_azimuth_rad").get<double>();
    trace.sector.width = obj.at("sector").at("width_rad").get<double>();
    trace.object_indices = parse_index_array(obj.at("object_indices"),
                                             "object_indices");
    trace.selected_indices = parse_index_array(obj.at("selected_indices"),
                                               "selected_indices");
    trace.untouched_object_indices =
        parse_index_array(obj.at("untouched_indices"), "untouched_indices");
    for (const auto& m : obj.at("displacements")) {
      DisplacedPoint moved;
      moved.index = m.at("index").get<std::int64_t>();
      const auto& orig = m.at("original");
      const auto& disp = m.at("displaced");
      if (!orig.is_array() || orig.size() != 3 || !disp.is_array() ||
          disp.size() != 3) {
        throw FormatError("manifest displacement coordinates malformed");
      }
      moved.original = Eigen::Vector3d(orig[0].get<double>(),
                                       orig[1].get<double>(),
                                       orig[2].get<double>());
      moved.displaced = Eigen::Vector3d(disp[0].get<double>(),
                                        disp[1].get<double>(),
                                        disp[2].get<double>());
      moved.reflectance = m.at("reflectance").get<float>();
      moved.distance = m.at("distance_m").get<double>();
      trace.displaced_points.push_back(std::move(moved));
    }
    if (trace.displaced_points.size() != trace.selected_indices.size()) {
      throw FormatError("manifest displacement count does not match "
                        "selected_indices");
    }
    traces.push_back(std::move(trace));
  }
  return traces;
}

}  // namespace ora
