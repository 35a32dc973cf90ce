#include "ora/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

namespace ora {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------------------
// Config (de)serialization.

template <typename T>
void maybe_get(const json& doc, const char* key, T& out) {
  if (doc.contains(key)) out = doc.at(key).get<T>();
}

AttackConfig attack_from_json(const json& doc) {
  AttackConfig config;
  maybe_get(doc, "budget", config.budget);
  if (doc.contains("sector_width_deg")) {
    config.sector_width = deg2rad(doc.at("sector_width_deg").get<double>());
  }
  maybe_get(doc, "sector_width_rad", config.sector_width);
  maybe_get(doc, "displacement_min_m", config.displacement_min);
  maybe_get(doc, "displacement_max_m", config.displacement_max);
  maybe_get(doc, "rng_seed", config.rng_seed);
  if (doc.contains("target_classes")) {
    const auto classes = doc.at("target_classes").get<std::vector<std::string>>();
    config.target_classes = {classes.begin(), classes.end()};
  }
  maybe_get(doc, "allow_budget_above_cap", config.allow_budget_above_cap);
  return config;
}

MetricsOptions metrics_from_json(const json& doc) {
  MetricsOptions options;
  if (doc.contains("interpolation")) {
    const std::string mode = doc.at("interpolation").get<std::string>();
    if (mode == "11pt") {
      options.interpolation = Interpolation::kElevenPoint;
    } else if (mode == "40pt") {
      options.interpolation = Interpolation::kFortyPoint;
    } else {
      throw ConfigError("interpolation must be '11pt' or '40pt'");
    }
  }
  if (doc.contains("iou_thresholds")) {
    options.iou_threshold_by_class =
        doc.at("iou_thresholds").get<std::map<std::string, double>>();
  }
  maybe_get(doc, "default_iou_threshold", options.default_iou_threshold);
  maybe_get(doc, "recall_iou_thresholds", options.recall_iou_thresholds);
  maybe_get(doc, "distance_bin_edges", options.distance_bin_edges);
  maybe_get(doc, "front_near_cut_m", options.front_near_cut);
  return options;
}

}  // namespace

RunConfig run_config_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("run config must be a JSON object");
  RunConfig config;
  if (doc.contains("dataset_root")) {
    config.dataset_root = doc.at("dataset_root").get<std::string>();
  }
  if (doc.contains("split_file")) {
    config.split_file = doc.at("split_file").get<std::string>();
  }
  if (doc.contains("output_root")) {
    config.output_root = doc.at("output_root").get<std::string>();
  }
  if (doc.contains("attack")) config.attack = attack_from_json(doc.at("attack"));
  maybe_get(doc, "budgets", config.budgets);
  if (doc.contains("metrics")) {
    config.metrics = metrics_from_json(doc.at("metrics"));
  }
  maybe_get(doc, "classes", config.classes);
  if (doc.contains("proxy")) {
    ProxyConfig proxy;
    maybe_get(doc.at("proxy"), "min_points", proxy.min_points);
    maybe_get(doc.at("proxy"), "score_scale", proxy.score_scale);
    config.proxy = proxy;
  }
  maybe_get(doc, "workers", config.workers);
  maybe_get(doc, "keep_going", config.keep_going);
  return config;
}

json run_config_to_json(const RunConfig& config) {
  json doc;
  doc["dataset_root"] = config.dataset_root.string();
  doc["split_file"] = config.split_file.string();
  doc["output_root"] = config.output_root.string();
  doc["attack"] = {
      {"budget", config.attack.budget},
      {"sector_width_rad", config.attack.sector_width},
      {"displacement_min_m", config.attack.displacement_min},
      {"displacement_max_m", config.attack.displacement_max},
      {"rng_seed", config.attack.rng_seed},
      {"target_classes",
       std::vector<std::string>(config.attack.target_classes.begin(),
                                config.attack.target_classes.end())},
      {"allow_budget_above_cap", config.attack.allow_budget_above_cap},
  };
  doc["budgets"] = config.budgets;
  doc["metrics"] = {
      {"interpolation",
       config.metrics.interpolation == Interpolation::kElevenPoint ? "11pt"
                                                                   : "40pt"},
      {"iou_thresholds", config.metrics.iou_threshold_by_class},
      {"default_iou_threshold", config.metrics.default_iou_threshold},
      {"recall_iou_thresholds", config.metrics.recall_iou_thresholds},
      {"distance_bin_edges", config.metrics.distance_bin_edges},
      {"front_near_cut_m", config.metrics.front_near_cut},
  };
  doc["classes"] = config.classes;
  if (config.proxy.has_value()) {
    doc["proxy"] = {{"min_points", config.proxy->min_points},
                    {"score_scale", config.proxy->score_scale}};
  }
  doc["workers"] = config.workers;
  doc["keep_going"] = config.keep_going;
  return doc;
}

// ---------------------------------------------------------------------------
// Frame iteration with a worker pool. Frames map to per-frame files only,
// so worker count cannot change any output byte.

namespace {

template <typename Fn>
std::vector<FrameFailure> for_each_frame(const std::vector<FrameId>& frames,
                                         int workers, bool keep_going,
                                         Fn&& fn) {
  workers = std::max(1, workers);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> aborted{false};
  std::mutex mutex;
  std::vector<FrameFailure> failures;

  auto worker = [&] {
    while (true) {
      if (aborted.load() && !keep_going) return;
      const std::size_t i = next.fetch_add(1);
      if (i >= frames.size()) return;
      try {
        fn(frames[i]);
      } catch (const std::exception& e) {
        std::lock_guard lock(mutex);
        failures.push_back({frames[i].name, e.what()});
        if (!keep_going) aborted.store(true);
      }
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }
  std::sort(failures.begin(), failures.end(),
            [](const FrameFailure& a, const FrameFailure& b) {
              return a.frame < b.frame;
            });
  return failures;
}

struct FramePaths {
  fs::path cloud, labels, calib;
};

FramePaths frame_paths(const fs::path& root, const std::string& name) {
  return {root / "velodyne" / (name + ".bin"),
          root / "label_2" / (name + ".txt"),
          root / "calib" / (name + ".txt")};
}

void require_dataset_layout(const fs::path& root) {
  for (const char* sub : {"velodyne", "label_2", "calib"}) {
    if (!fs::is_directory(root / sub)) {
      throw ConfigError("dataset root " + root.string() +
                        " is missing the " + sub + "/ subtree");
    }
  }
}

std::string format_csv_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Ground truth / detection loading.

std::map<std::string, std::vector<GroundTruth>> load_ground_truths(
    const std::vector<RawLabel>& labels, const Calibration& calib,
    const std::vector<std::string>& classes) {
  std::map<std::string, std::vector<GroundTruth>> by_class;
  for (const std::string& c : classes) by_class[c];
  for (const RawLabel& label : labels) {
    if (label.is_dont_care()) continue;  // no 3D geometry to match against
    const auto it = by_class.find(label.class_name);
    if (it == by_class.end()) continue;
    it->second.push_back(
        {camera_box_to_lidar(label, calib), assign_difficulty(label)});
  }
  return by_class;
}

std::map<std::string, std::vector<Detection>> load_detections(
    const std::vector<RawLabel>& labels, const Calibration& calib,
    const std::vector<std::string>& classes) {
  std::map<std::string, std::vector<Detection>> by_class;
  for (const std::string& c : classes) by_class[c];
  for (const RawLabel& label : labels) {
    if (label.is_dont_care()) continue;
    const auto it = by_class.find(label.class_name);
    if (it == by_class.end()) continue;
    if (!label.score.has_value()) {
      throw DataError("detection row for class " + label.class_name +
                      " has no score");
    }
    it->second.push_back({camera_box_to_lidar(label, calib), *label.score});
  }
  return by_class;
}

// ---------------------------------------------------------------------------
// Attack runs.

AttackRunSummary run_attack(const RunConfig& config) {
  config.attack.validate();
  require_dataset_layout(config.dataset_root);
  const std::vector<FrameId> frames = read_split_file(config.split_file);

  fs::create_directories(config.output_root);
  write_text_file(config.output_root / "run_config.json",
                  run_config_to_json(config).dump(2) + "\n");

  AttackRunSummary summary;
  std::mutex mutex;
  for (int budget : config.budgets) {
    AttackConfig attack = config.attack;
    attack.budget = budget;
    attack.validate();

    const fs::path out_root =
        config.output_root / ("budget_" + std::to_string(budget));
    fs::create_directories(out_root / "velodyne");
    fs::create_directories(out_root / "manifests");
    fs::create_directories(out_root / "label_2");
    fs::create_directories(out_root / "calib");

    auto failures = for_each_frame(
        frames, config.workers, config.keep_going,
        [&](const FrameId& frame) {
          const FramePaths in = frame_paths(config.dataset_root, frame.name);
          const PointCloud cloud = read_point_cloud_file(in.cloud);
          const std::vector<RawLabel> labels =
              read_label_file(in.labels, /*has_score=*/false);
          const Calibration calib = read_calib_file(in.calib);

          std::vector<BoundingBox3D> targets;
          for (const RawLabel& label : labels) {
            if (label.is_dont_care()) continue;
            if (!attack.target_classes.contains(label.class_name)) continue;
            targets.push_back(camera_box_to_lidar(label, calib));
          }

          auto [perturbed, traces] =
              attack_scene(cloud, targets, attack, frame.number);

          write_point_cloud_file(out_root / "velodyne" / (frame.name + ".bin"),
                                 perturbed);
          write_text_file(
              out_root / "manifests" / (frame.name + ".json"),
              attack_manifest(frame.name, attack, traces).dump(2) + "\n");
          fs::copy_file(in.labels, out_root / "label_2" / (frame.name + ".txt"),
                        fs::copy_options::overwrite_existing);
          fs::copy_file(in.calib, out_root / "calib" / (frame.name + ".txt"),
                        fs::copy_options::overwrite_existing);

          long displaced = 0;
          for (const AttackTrace& t : traces) {
            displaced += static_cast<long>(t.displaced_points.size());
          }
          std::lock_guard lock(mutex);
          ++summary.frames_attacked;
          summary.objects_attacked += static_cast<int>(traces.size());
          summary.points_displaced += displaced;
        });

    // The split file mirrors the inputs so the tree is self-contained.
    std::string split;
    for (const FrameId& frame : frames) split += frame.name + "\n";
    write_text_file(out_root / "split.txt", split);

    summary.failures.insert(summary.failures.end(), failures.begin(),
                            failures.end());
    ++summary.budgets_run;
    if (!failures.empty() && !config.keep_going) break;
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Evaluation of detection files.

namespace {

struct LoadedFrames {
  std::map<std::string, std::vector<FrameObjects>> by_class;
};

LoadedFrames load_eval_frames(const fs::path& gt_root,
                              const std::vector<FrameId>& frames,
                              const fs::path& det_root,
                              const RunConfig& config) {
  // A fully empty detection dir means "detector produced nothing"; a
  // partially missing one is a mismatch worth failing on.
  bool det_dir_empty = true;
  if (fs::is_directory(det_root)) {
    for (const auto& entry : fs::directory_iterator(det_root)) {
      (void)entry;
      det_dir_empty = false;
      break;
    }
  }
  std::vector<std::string> missing;
  for (const FrameId& frame : frames) {
    if (!fs::exists(det_root / (frame.name + ".txt"))) {
      missing.push_back(frame.name);
    }
  }
  if (!det_dir_empty && !missing.empty()) {
    std::string list;
    for (std::size_t i = 0; i < missing.size() && i < 20; ++i) {
      list += (i ? ", " : "") + missing[i];
    }
    if (missing.size() > 20) list += ", ...";
    throw DataError("detection files missing for " +
                    std::to_string(missing.size()) + " frames: " + list);
  }

  LoadedFrames loaded;
  for (const std::string& c : config.classes) loaded.by_class[c];
  for (const FrameId& frame : frames) {
    const FramePaths gt = frame_paths(gt_root, frame.name);
    const std::vector<RawLabel> gt_labels =
        read_label_file(gt.labels, /*has_score=*/false);
    const Calibration calib = read_calib_file(gt.calib);
    auto gts = load_ground_truths(gt_labels, calib, config.classes);

    std::map<std::string, std::vector<Detection>> dets;
    const fs::path det_file = det_root / (frame.name + ".txt");
    if (fs::exists(det_file)) {
      dets = load_detections(read_label_file(det_file, /*has_score=*/true),
                             calib, config.classes);
    }
    for (const std::string& c : config.classes) {
      loaded.by_class[c].push_back({std::move(dets[c]), std::move(gts[c])});
    }
  }
  return loaded;
}

}  // namespace

EvaluationReport run_eval(const fs::path& gt_root, const fs::path& split_file,
                          const fs::path& det_root, const RunConfig& config,
                          const fs::path& out_dir,
                          const std::string& budget_label) {
  if (!fs::is_directory(gt_root / "label_2") ||
      !fs::is_directory(gt_root / "calib")) {
    throw ConfigError("ground-truth root " + gt_root.string() +
                      " is missing label_2/ or calib/");
  }
  const std::vector<FrameId> frames = read_split_file(split_file);
  const LoadedFrames loaded = load_eval_frames(gt_root, frames, det_root,
                                               config);
  const EvaluationReport report = evaluate(loaded.by_class, config.metrics);

  fs::create_directories(out_dir);
  const std::vector<std::pair<std::string, const EvaluationReport*>> runs = {
      {budget_label, &report}};
  write_text_file(out_dir / "ap_table.csv", ap_table_csv(runs));
  write_text_file(out_dir / "recall_iou.csv", recall_iou_csv(runs));
  write_text_file(out_dir / "recall_by_distance.csv",
                  recall_by_distance_csv(runs));
  write_text_file(out_dir / "ap_table.json",
                  report_to_json(report, budget_label).dump(2) + "\n");
  return report;
}

// ---------------------------------------------------------------------------
// Proxy sweep.

ProxySweepResult run_proxy_sweep(const RunConfig& config) {
  if (!config.proxy.has_value()) {
    throw ConfigError("proxy sweep requires a proxy config (min_points, "
                      "score_scale)");
  }
  config.proxy->validate();
  config.attack.validate();
  require_dataset_layout(config.dataset_root);
  const std::vector<FrameId> frames = read_split_file(config.split_file);

  fs::create_directories(config.output_root);
  write_text_file(config.output_root / "run_config.json",
                  run_config_to_json(config).dump(2) + "\n");

  ProxySweepResult result;
  for (int budget : config.budgets) {
    AttackConfig attack = config.attack;
    attack.budget = budget;
    attack.validate();

    const fs::path budget_root =
        config.output_root / ("budget_" + std::to_string(budget));
    const fs::path det_root = budget_root / "proxy_dets";
    fs::create_directories(det_root);

    auto failures = for_each_frame(
        frames, config.workers, config.keep_going,
        [&](const FrameId& frame) {
          const FramePaths in = frame_paths(config.dataset_root, frame.name);
          const PointCloud cloud = read_point_cloud_file(in.cloud);
          const std::vector<RawLabel> labels =
              read_label_file(in.labels, /*has_score=*/false);
          const Calibration calib = read_calib_file(in.calib);

          // Candidates: every ground-truth box of an evaluated class.
          // Attack targets: the subset in the attack's class list.
          std::vector<const RawLabel*> candidate_labels;
          std::vector<BoundingBox3D> candidates;
          std::vector<BoundingBox3D> targets;
          for (const RawLabel& label : labels) {
            if (label.is_dont_care()) continue;
            if (std::find(config.classes.begin(), config.classes.end(),
                          label.class_name) == config.classes.end()) {
              continue;
            }
            BoundingBox3D box = camera_box_to_lidar(label, calib);
            if (attack.target_classes.contains(label.class_name)) {
              targets.push_back(box);
            }
            candidate_labels.push_back(&label);
            candidates.push_back(std::move(box));
          }

          auto [perturbed, traces] =
              attack_scene(cloud, targets, attack, frame.number);
          const std::vector<ProxyDetection> hits =
              proxy_detect(perturbed, candidates, *config.proxy);

          std::vector<RawLabel> det_rows;
          det_rows.reserve(hits.size());
          for (const ProxyDetection& hit : hits) {
            RawLabel row = *candidate_labels[hit.candidate_index];
            row.score = hit.score;
            det_rows.push_back(std::move(row));
          }
          write_label_file(det_root / (frame.name + ".txt"), det_rows,
                           /*with_score=*/true);
        });
    result.failures.insert(result.failures.end(), failures.begin(),
                           failures.end());
    if (!failures.empty() && !config.keep_going) return result;

    result.by_budget[budget] =
        run_eval(config.dataset_root, config.split_file, det_root, config,
                 budget_root / "eval", std::to_string(budget));
  }

  // Combined sweep tables over all budgets.
  std::vector<std::pair<std::string, const EvaluationReport*>> runs;
  for (const auto& [budget, report] : result.by_budget) {
    runs.emplace_back(std::to_string(budget), &report);
  }
  write_text_file(config.output_root / "ap_table.csv", ap_table_csv(runs));
  write_text_file(config.output_root / "recall_iou.csv",
                  recall_iou_csv(runs));
  write_text_file(config.output_root / "recall_by_distance.csv",
                  recall_by_distance_csv(runs));

  std::string sweep = "class,budget,iou_threshold,recall\n";
  for (const auto& [budget, report] : result.by_budget) {
    for (const auto& [class_name, eval] : report) {
      if (!eval.recall_at_threshold.has_value()) continue;
      sweep += class_name + "," + std::to_string(budget) + "," +
               format_csv_double(eval.iou_threshold) + "," +
               format_csv_double(*eval.recall_at_threshold) + "\n";
    }
  }
  write_text_file(config.output_root / "recall_vs_budget.csv", sweep);
  return result;
}

// ---------------------------------------------------------------------------
// Report serialization.

json report_to_json(const EvaluationReport& report,
                    const std::string& budget_label) {
  json doc;
  doc["budget"] = budget_label;
  json classes = json::object();
  for (const auto& [class_name, eval] : report) {
    json c;
    c["iou_threshold"] = eval.iou_threshold;
    c["num_ground_truths"] = eval.num_ground_truths;
    c["num_detections"] = eval.num_detections;
    json ap = json::object();
    for (const auto& [level, value] : eval.ap) {
      ap[difficulty_name(level)] =
          value.has_value() ? json(*value) : json(nullptr);
    }
    c["ap_percent"] = std::move(ap);
    if (eval.recall_at_threshold.has_value()) {
      c["recall_at_threshold"] = *eval.recall_at_threshold;
    }
    auto curve_json = [](const std::vector<RecallPoint>& curve) {
      json arr = json::array();
      for (const RecallPoint& p : curve) {
        arr.push_back({{"iou_threshold", p.iou_threshold},
                       {"recall", p.recall}});
      }
      return arr;
    };
    c["recall_iou_all"] = curve_json(eval.recall_iou_all);
    c["recall_iou_moderate"] = curve_json(eval.recall_iou_moderate);
    auto bins_json = [](const std::vector<DistanceBinRecall>& bins) {
      json arr = json::array();
      for (const DistanceBinRecall& b : bins) {
        arr.push_back({{"lo_m", b.lo},
                       {"hi_m", std::isinf(b.hi) ? json("inf") : json(b.hi)},
                       {"num_gts", b.num_gts},
                       {"num_matched", b.num_matched},
                       {"recall", b.recall}});
      }
      return arr;
    };
    c["recall_by_distance"] = bins_json(eval.recall_by_distance);
    c["recall_front_near"] = bins_json(eval.recall_front_near);
    classes[class_name] = std::move(c);
  }
  doc["classes"] = std::move(classes);
  return doc;
}

std::string ap_table_csv(
    const std::vector<std::pair<std::string, const EvaluationReport*>>& runs) {
  std::string csv = "class,budget,difficulty,iou_threshold,ap_percent\n";
  for (const auto& [budget, report] : runs) {
    for (const auto& [class_name, eval] : *report) {
      for (const auto& [level, value] : eval.ap) {
        csv += class_name + "," + budget + "," + difficulty_name(level) + "," +
               format_csv_double(eval.iou_threshold) + "," +
               (value.has_value() ? format_csv_double(*value) : "") + "\n";
      }
    }
  }
  return csv;
}

std::string recall_iou_csv(
    const std::vector<std::pair<std::string, const EvaluationReport*>>& runs) {
  std::string csv = "class,budget,difficulty_pool,iou_threshold,recall\n";
  for (const auto& [budget, report] : runs) {
    for (const auto& [class_name, eval] : *report) {
      for (const RecallPoint& p : eval.recall_iou_all) {
        csv += class_name + "," + budget + ",all," +
               format_csv_double(p.iou_threshold) + "," +
               format_csv_double(p.recall) + "\n";
      }
      for (const RecallPoint& p : eval.recall_iou_moderate) {
        csv += class_name + "," + budget + ",moderate," +
               format_csv_double(p.iou_threshold) + "," +
               format_csv_double(p.recall) + "\n";
      }
    }
  }
  return csv;
}

std::string recall_by_distance_csv(
    const std::vector<std::pair<std::string, const EvaluationReport*>>& runs) {
  std::string csv =
      "class,budget,iou_threshold,bin_lo_m,bin_hi_m,num_gts,recall\n";
  for (const auto& [budget, report] : runs) {
    for (const auto& [class_name, eval] : *report) {
      auto rows = [&](const std::vector<DistanceBinRecall>& bins) {
        for (const DistanceBinRecall& b : bins) {
          csv += class_name + "," + budget + "," +
                 format_csv_double(eval.iou_threshold) + "," +
                 format_csv_double(b.lo) + "," + format_csv_double(b.hi) +
                 "," + std::to_string(b.num_gts) + "," +
                 format_csv_double(b.recall) + "\n";
        }
      };
      rows(eval.recall_by_distance);
      rows(eval.recall_front_near);
    }
  }
  return csv;
}

}  // namespace ora
