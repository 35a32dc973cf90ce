#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ora/geometry.hpp"
#include "ora/kitti_io.hpp"

namespace ora {

/// KITTI difficulty strata. Levels nest: an Easy object also counts when
/// evaluating at Moderate or Hard. Ignored objects are never countable but
/// still suppress detections that land on them.
enum class Difficulty { kEasy = 0, kModerate = 1, kHard = 2, kIgnored = 3 };

const char* difficulty_name(Difficulty level);

/// Devkit thresholds on 2D bbox height / occlusion / truncation:
///   Easy:     height >= 40 px, occlusion <= 0, truncation <= 0.15
///   Moderate: height >= 25 px, occlusion <= 1, truncation <= 0.30
///   Hard:     height >= 25 px, occlusion <= 2, truncation <= 0.50
/// Anything below Hard (and every DontCare) is Ignored.
Difficulty assign_difficulty(const RawLabel& label);

struct Detection {
  BoundingBox3D box;
  double score = 0.0;
};

struct GroundTruth {
  BoundingBox3D box;
  Difficulty difficulty = Difficulty::kHard;
};

/// Detections and ground truths of one frame, one class.
struct FrameObjects {
  std::vector<Detection> detections;
  std::vector<GroundTruth> ground_truths;
};

enum class DetectionOutcome { kTruePositive, kFalsePositive, kIgnored };

struct MatchResult {
  std::vector<DetectionOutcome> outcomes;   // per detection, input order
  std::vector<int> matched_gt;              // gt index per detection, -1
  std::vector<bool> gt_matched;             // per ground truth
  int num_countable_gts = 0;
  int tp = 0, fp = 0, fn = 0;
};

/// Greedy one-to-one matching: detections in descending score order each
/// take the unmatched countable ground truth of highest IoU >= threshold.
/// Ground truths above `level` (or Ignored) are not countable: detections
/// whose only >=threshold overlap is with such a box are neither TP nor FP.
MatchResult match_detections(const std::vector<Detection>& detections,
                             const std::vector<GroundTruth>& ground_truths,
                             double iou_threshold, Difficulty level);

enum class Interpolation { kElevenPoint, kFortyPoint };

/// Interpolated average precision over frames pooled at one threshold, as
/// a percentage. The precision/recall curve is swept at every distinct
/// detection score; 11-point interpolation averages the right-max
/// precision at recalls {0, 0.1, ..., 1.0}, 40-point at {1/40, ..., 1.0}.
/// Returns nullopt when there is no countable ground truth.
std::optional<double> average_precision(const std::vector<FrameObjects>& frames,
                                        double iou_threshold, Difficulty level,
                                        Interpolation interpolation);

struct RecallPoint {
  double iou_threshold = 0.0;
  double recall = 0.0;  // [0, 1]
};

/// Pooled recall at each IoU threshold (ascending thresholds required).
/// Empty when there is no countable ground truth.
std::vector<RecallPoint> recall_iou_curve(const std::vector<FrameObjects>& frames,
                                          const std::vector<double>& thresholds,
                                          Difficulty level);

struct DistanceBinRecall {
  double lo = 0.0, hi = 0.0;  // metres, [lo, hi)
  int num_gts = 0;
  int num_matched = 0;
  double recall = 0.0;
};

/// Recall per distance bin at a fixed IoU threshold. Distance is the
/// horizontal (x, y) range of the ground-truth box centre. Bins with no
/// ground truth are absent from the result.
std::vector<DistanceBinRecall> recall_by_distance(
    const std::vector<FrameObjects>& frames,
    const std::vector<double>& bin_edges, double iou_threshold,
    Difficulty level);

// ---------------------------------------------------------------------------
// Report assembly.

struct ClassEval {
  // AP percentage per difficulty; absent when the stratum has no gts.
  std::map<Difficulty, std::optional<double>> ap;
  // Recall-IoU pooled over all ratable difficulties, and Moderate-only.
  std::vector<RecallPoint> recall_iou_all;
  std::vector<RecallPoint> recall_iou_moderate;
  std::vector<DistanceBinRecall> recall_by_distance;
  std::vector<DistanceBinRecall> recall_front_near;  // {0,11,+inf} cut
  // Recall over all ratable difficulties at the class IoU threshold.
  std::optional<double> recall_at_threshold;
  double iou_threshold = 0.0;
  int num_ground_truths = 0;
  int num_detections = 0;
};

/// Evaluation of one detection set against one ground-truth set.
using EvaluationReport = std::map<std::string, ClassEval>;

struct MetricsOptions {
  Interpolation interpolation = Interpolation::kElevenPoint;
  std::map<std::string, double> iou_threshold_by_class = {
      {"Car", 0.7}, {"Pedestrian", 0.5}, {"Cyclist", 0.5}};
  double default_iou_threshold = 0.5;
  std::vector<double> recall_iou_thresholds = {0.1, 0.2, 0.3, 0.4, 0.5,
                                               0.6, 0.7, 0.8, 0.9};
  std::vector<double> distance_bin_edges = {0, 10, 20, 30, 40, 50, 60, 70};
  double front_near_cut = 11.0;  // metres

  double iou_threshold_for(const std::string& class_name) const;
};

/// Full per-class evaluation of pooled frames, keyed by class name.
EvaluationReport evaluate(
    const std::map<std::string, std::vector<FrameObjects>>& frames_by_class,
    const MetricsOptions& options);

}  // namespace ora
