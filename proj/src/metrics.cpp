#include "ora/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace ora {

namespace {

struct DifficultyRule {
  double min_bbox_height;
  int max_occlusion;
  double max_truncation;
};

// Devkit threshold table, indexed by Difficulty.
constexpr DifficultyRule kRules[3] = {
    {40.0, 0, 0.15},  // Easy
    {25.0, 1, 0.30},  // Moderate
    {25.0, 2, 0.50},  // Hard
};

bool countable(const GroundTruth& gt, Difficulty level) {
  return gt.difficulty != Difficulty::kIgnored &&
         static_cast<int>(gt.difficulty) <= static_cast<int>(level);
}

// Detection order by descending score; ties keep input order so matching
// is deterministic.
std::vector<std::size_t> score_order(const std::vector<Detection>& dets) {
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&dets](std::size_t a, std::size_t b) {
                     return dets[a].score > dets[b].score;
                   });
  return order;
}

struct ScoredOutcome {
  double score;
  bool is_tp;
};

// Pooled (score, TP/FP) outcomes; ignored detections drop out entirely.
void pool_outcomes(const std::vector<FrameObjects>& frames,
                   double iou_threshold, Difficulty level,
                   std::vector<ScoredOutcome>& outcomes, int& num_gts) {
  outcomes.clear();
  num_gts = 0;
  for (const FrameObjects& frame : frames) {
    const MatchResult match =
        match_detections(frame.detections, frame.ground_truths, iou_threshold,
                         level);
    num_gts += match.num_countable_gts;
    for (std::size_t d = 0; d < frame.detections.size(); ++d) {
      switch (match.outcomes[d]) {
        case DetectionOutcome::kTruePositive:
          outcomes.push_back({frame.detections[d].score, true});
          break;
        case DetectionOutcome::kFalsePositive:
          outcomes.push_back({frame.detections[d].score, false});
          break;
        case DetectionOutcome::kIgnored:
          break;
      }
    }
  }
}

struct PrPoint {
  double recall;
  double precision;
};

// Exact PR curve: one point after each distinct score value (a threshold
// at that score admits every detection scored >= it).
std::vector<PrPoint> pr_curve(std::vector<ScoredOutcome>& outcomes,
                              int num_gts) {
  std::stable_sort(outcomes.begin(), outcomes.end(),
                   [](const ScoredOutcome& a, const ScoredOutcome& b) {
                     return a.score > b.score;
                   });
  std::vector<PrPoint> curve;
  int tp = 0, fp = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    if (outcomes[i].is_tp) {
      ++tp;
    } else {
      ++fp;
    }
    const bool last_of_score = i + 1 == outcomes.size() ||
                               outcomes[i + 1].score != outcomes[i].score;
    if (last_of_score) {
      curve.push_back({static_cast<double>(tp) / num_gts,
                       static_cast<double>(tp) / (tp + fp)});
    }
  }
  return curve;
}

double interpolated_ap(const std::vector<PrPoint>& curve,
                       Interpolation interpolation) {
  const int n = interpolation == Interpolation::kElevenPoint ? 11 : 40;
  double sum = 0.0;
  for (int k = 0; k < n; ++k) {
    const double r = interpolation == Interpolation::kElevenPoint
                         ? k / 10.0
                         : (k + 1) / 40.0;
    double best = 0.0;
    for (const PrPoint& p : curve) {
      if (p.recall >= r - 1e-12) best = std::max(best, p.precision);
    }
    sum += best;
  }
  return 100.0 * sum / n;
}

double center_range_2d(const BoundingBox3D& box) {
  return std::hypot(box.center.x(), box.center.y());
}

}  // namespace

const char* difficulty_name(Difficulty level) {
  switch (level) {
    case Difficulty::kEasy: return "easy";
    case Difficulty::kModerate: return "moderate";
    case Difficulty::kHard: return "hard";
    case Difficulty::kIgnored: return "ignored";
  }
  return "?";
}

Difficulty assign_difficulty(const RawLabel& label) {
  if (label.is_dont_care()) return Difficulty::kIgnored;
  const double bbox_height = label.bbox2d.height();
  for (int level = 0; level < 3; ++level) {
    const DifficultyRule& rule = kRules[level];
    if (bbox_height >= rule.min_bbox_height &&
        label.occlusion <= rule.max_occlusion &&
        label.truncation <= rule.max_truncation) {
      return static_cast<Difficulty>(level);
    }
  }
  return Difficulty::kIgnored;
}

MatchResult match_detections(const std::vector<Detection>& detections,
                             const std::vector<GroundTruth>& ground_truths,
                             double iou_threshold, Difficulty level) {
  MatchResult result;
  result.outcomes.assign(detections.size(), DetectionOutcome::kFalsePositive);
  result.matched_gt.assign(detections.size(), -1);
  result.gt_matched.assign(ground_truths.size(), false);
  for (const GroundTruth& gt : ground_truths) {
    if (countable(gt, level)) ++result.num_countable_gts;
  }

  for (std::size_t d : score_order(detections)) {
    const Detection& det = detections[d];
    int best_gt = -1;
    double best_iou = iou_threshold;
    bool overlaps_ignored = false;
    for (std::size_t g = 0; g < ground_truths.size(); ++g) {
      const double iou = iou_3d(det.box, ground_truths[g].box);
      if (iou < iou_threshold) continue;
      if (!countable(ground_truths[g], level)) {
        overlaps_ignored = true;
        continue;
      }
      if (result.gt_matched[g]) continue;
      if (iou > best_iou || best_gt < 0) {
        best_iou = iou;
        best_gt = static_cast<int>(g);
      }
    }
    if (best_gt >= 0) {
      result.gt_matched[best_gt] = true;
      result.matched_gt[d] = best_gt;
      result.outcomes[d] = DetectionOutcome::kTruePositive;
      ++result.tp;
    } else if (overlaps_ignored) {
      result.outcomes[d] = DetectionOutcome::kIgnored;
    } else {
      ++result.fp;
    }
  }
  result.fn = result.num_countable_gts - result.tp;
  return result;
}

std::optional<double> average_precision(const std::vector<FrameObjects>& frames,
                                        double iou_threshold, Difficulty level,
                                        Interpolation interpolation) {
  std::vector<ScoredOutcome> outcomes;
  int num_gts = 0;
  pool_outcomes(frames, iou_threshold, level, outcomes, num_gts);
  if (num_gts == 0) return std::nullopt;
  if (outcomes.empty()) return 0.0;
  const std::vector<PrPoint> curve = pr_curve(outcomes, num_gts);
  return interpolated_ap(curve, interpolation);
}

std::vector<RecallPoint> recall_iou_curve(const std::vector<FrameObjects>& frames,
                                          const std::vector<double>& thresholds,
                                          Difficulty level) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end())) {
    throw ConfigError("recall-IoU thresholds must be ascending");
  }
  std::vector<RecallPoint> curve;
  for (double thr : thresholds) {
    int tp = 0, gts = 0;
    for (const FrameObjects& frame : frames) {
      const MatchResult match =
          match_detections(frame.detections, frame.ground_truths, thr, level);
      tp += match.tp;
      gts += match.num_countable_gts;
    }
    if (gts == 0) return {};
    curve.push_back({thr, static_cast<double>(tp) / gts});
  }
  return curve;
}

std::vector<DistanceBinRecall> recall_by_distance(
    const std::vector<FrameObjects>& frames,
    const std::vector<double>& bin_edges, double iou_threshold,
    Difficulty level) {
  if (bin_edges.size() < 2 ||
      !std::is_sorted(bin_edges.begin(), bin_edges.end())) {
    throw ConfigError("distance bin edges must be ascending, >= 2 edges");
  }
  const std::size_t bins = bin_edges.size() - 1;
  std::vector<int> gts(bins, 0), matched(bins, 0);

  for (const FrameObjects& frame : frames) {
    const MatchResult match =
        match_detections(frame.detections, frame.ground_truths, iou_threshold,
                         level);
    for (std::size_t g = 0; g < frame.ground_truths.size(); ++g) {
      const GroundTruth& gt = frame.ground_truths[g];
      if (!countable(gt, level)) continue;
      const double range = center_range_2d(gt.box);
      const auto it =
          std::upper_bound(bin_edges.begin(), bin_edges.end(), range);
      if (it == bin_edges.begin() || it == bin_edges.end()) continue;
      const std::size_t bin = static_cast<std::size_t>(
          std::distance(bin_edges.begin(), it) - 1);
      ++gts[bin];
      if (match.gt_matched[g]) ++matched[bin];
    }
  }

  std::vector<DistanceBinRecall> result;
  for (std::size_t b = 0; b < bins; ++b) {
    if (gts[b] == 0) continue;  // absent, not zero
    result.push_back({bin_edges[b], bin_edges[b + 1], gts[b], matched[b],
                      static_cast<double>(matched[b]) / gts[b]});
  }
  return result;
}

double MetricsOptions::iou_threshold_for(const std::string& class_name) const {
  const auto it = iou_threshold_by_class.find(class_name);
  return it == iou_threshold_by_class.end() ? default_iou_threshold
                                            : it->second;
}

EvaluationReport evaluate(
    const std::map<std::string, std::vector<FrameObjects>>& frames_by_class,
    const MetricsOptions& options) {
  EvaluationReport report;
  for (const auto& [class_name, frames] : frames_by_class) {
    ClassEval eval;
    eval.iou_threshold = options.iou_threshold_for(class_name);
    for (const FrameObjects& frame : frames) {
      eval.num_detections += static_cast<int>(frame.detections.size());
      for (const GroundTruth& gt : frame.ground_truths) {
        if (gt.difficulty != Difficulty::kIgnored) ++eval.num_ground_truths;
      }
    }
    for (Difficulty level : {Difficulty::kEasy, Difficulty::kModerate,
                             Difficulty::kHard}) {
      eval.ap[level] = average_precision(frames, eval.iou_threshold, level,
                                         options.interpolation);
    }
    eval.recall_iou_all = recall_iou_curve(
        frames, options.recall_iou_thresholds, Difficulty::kHard);
    eval.recall_iou_moderate = recall_iou_curve(
        frames, options.recall_iou_thresholds, Difficulty::kModerate);
    const std::vector<RecallPoint> at_thr =
        recall_iou_curve(frames, {eval.iou_threshold}, Difficulty::kHard);
    if (!at_thr.empty()) eval.recall_at_threshold = at_thr.front().recall;
    eval.recall_by_distance =
        recall_by_distance(frames, options.distance_bin_edges,
                           eval.iou_threshold, Difficulty::kHard);
    eval.recall_front_near = recall_by_distance(
        frames, {0.0, options.front_near_cut,
                 std::numeric_limits<double>::infinity()},
        eval.iou_threshold, Difficulty::kHard);
    report[class_name] = std::move(eval);
  }
  return report;
}

}  // namespace ora
