#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "ora/attack.hpp"
#include "ora/metrics.hpp"
#include "ora/proxy_detector.hpp"
#include "ora/synth.hpp"

namespace ora {

/// Everything a batch run needs. The JSON config file mirrors this struct
/// field for field; command-line flags override individual entries.
struct RunConfig {
  std::filesystem::path dataset_root;
  std::filesystem::path split_file;
  std::filesystem::path output_root;

  AttackConfig attack;
  std::vector<int> budgets = {10, 20, 40, 60, 100, 150, 200};
  MetricsOptions metrics;
  std::vector<std::string> classes = {"Car", "Pedestrian", "Cyclist"};
  std::optional<ProxyConfig> proxy;

  int workers = 1;
  bool keep_going = false;
};

RunConfig run_config_from_json(const nlohmann::json& doc);
nlohmann::json run_config_to_json(const RunConfig& config);

/// One failed frame: id and what went wrong.
struct FrameFailure {
  std::string frame;
  std::string message;
};

struct AttackRunSummary {
  int budgets_run = 0;
  int frames_attacked = 0;   // frame x budget outputs written
  int objects_attacked = 0;
  long points_displaced = 0;
  std::vector<FrameFailure> failures;
};

/// Perturbs every split frame at every budget. Output layout per budget:
///   output_root/budget_<k>/velodyne/<frame>.bin   perturbed cloud
///   output_root/budget_<k>/manifests/<frame>.json attack manifest
///   output_root/budget_<k>/label_2, calib         verbatim copies
///   output_root/budget_<k>/split.txt
/// plus run_config.json echoed at output_root. Deterministic for a fixed
/// seed: rerunning writes byte-identical trees regardless of workers.
AttackRunSummary run_attack(const RunConfig& config);

/// Evaluates KITTI-format detection files against ground-truth labels.
/// Every split frame must have a detection file; missing files raise
/// DataError listing the missing ids, except when the detection dir is
/// entirely empty, which evaluates as "no detections anywhere".
/// Writes ap_table.csv/.json, recall_iou.csv, recall_by_distance.csv
/// under out_dir. budget_label fills the budget column of the tables.
EvaluationReport run_eval(const std::filesystem::path& gt_root,
                          const std::filesystem::path& split_file,
                          const std::filesystem::path& det_root,
                          const RunConfig& config,
                          const std::filesystem::path& out_dir,
                          const std::string& budget_label = "na");

struct ProxySweepResult {
  std::map<int, EvaluationReport> by_budget;
  std::vector<FrameFailure> failures;
};

/// Closed loop per budget: attack -> proxy detect -> detection files ->
/// evaluation. Proxy detections are written in KITTI detection format
/// under output_root/budget_<k>/proxy_dets/ and evaluated through the
/// same reader path as external detectors. Sweep tables
/// (recall_vs_budget.csv, ap_table.csv, recall_by_distance.csv) land at
/// output_root.
ProxySweepResult run_proxy_sweep(const RunConfig& config);

/// Reads one frame's ground truth as per-class metric inputs (boxes in
/// the velodyne frame, devkit difficulty).
std::map<std::string, std::vector<GroundTruth>> load_ground_truths(
    const std::vector<RawLabel>& labels, const Calibration& calib,
    const std::vector<std::string>& classes);

/// Same for a detection label set (16-field rows).
std::map<std::string, std::vector<Detection>> load_detections(
    const std::vector<RawLabel>& labels, const Calibration& calib,
    const std::vector<std::string>& classes);

// Report serialization, shared by eval and sweep outputs.
nlohmann::json report_to_json(const EvaluationReport& report,
                              const std::string& budget_label);
std::string ap_table_csv(
    const std::vector<std::pair<std::string, const EvaluationReport*>>& runs);
std::string recall_iou_csv(
    const std::vector<std::pair<std::string, const EvaluationReport*>>& runs);
std::string recall_by_distance_csv(
    const std::vector<std::pair<std::string, const EvaluationReport*>>& runs);

}  // namespace ora
