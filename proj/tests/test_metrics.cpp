#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "ora/metrics.hpp"
#include "test_support.hpp"

using namespace ora;

namespace {

BoundingBox3D box_at(double x, double y, const char* cls = "Car") {
  BoundingBox3D box;
  box.center = Eigen::Vector3d(x, y, 0.0);
  box.length = 4.0;
  box.width = 2.0;
  box.height = 2.0;
  box.yaw = 0.0;
  box.class_name = cls;
  return box;
}

RawLabel label_with(double bbox_height, int occlusion, double truncation) {
  RawLabel label;
  label.class_name = "Car";
  label.bbox2d = {100.0, 100.0, 150.0, 100.0 + bbox_height};
  label.occlusion = occlusion;
  label.truncation = truncation;
  label.height = 1.5;
  label.width = 1.6;
  label.length = 3.9;
  return label;
}

}  // namespace

TEST_CASE("assign_difficulty follows the devkit threshold table") {
  CHECK(assign_difficulty(label_with(60, 0, 0.0)) == Difficulty::kEasy);
  CHECK(assign_difficulty(label_with(30, 1, 0.2)) == Difficulty::kModerate);
  CHECK(assign_difficulty(label_with(20, 3, 0.0)) == Difficulty::kIgnored);
  CHECK(assign_difficulty(label_with(45, 2, 0.45)) == Difficulty::kHard);
  CHECK(assign_difficulty(label_with(60, 0, 0.2)) == Difficulty::kModerate);
  CHECK(assign_difficulty(label_with(24, 0, 0.0)) == Difficulty::kIgnored);

  RawLabel dont_care = label_with(60, 0, 0.0);
  dont_care.class_name = "DontCare";
  CHECK(assign_difficulty(dont_care) == Difficulty::kIgnored);
}

TEST_CASE("match_detections: single overlap above threshold is a TP") {
  const std::vector<GroundTruth> gts = {{box_at(0, 0), Difficulty::kEasy}};
  // Shifted box with IoU (4-dx)/(4+dx) = 0.8
  const std::vector<Detection> dets = {{box_at(4.0 / 9.0, 0), 0.9}};
  const MatchResult m = match_detections(dets, gts, 0.7, Difficulty::kHard);
  CHECK(m.tp == 1);
  CHECK(m.fp == 0);
  CHECK(m.fn == 0);
  CHECK(m.outcomes[0] == DetectionOutcome::kTruePositive);
}

TEST_CASE("match_detections: one-to-one, higher score wins the ground truth") {
  const std::vector<GroundTruth> gts = {{box_at(0, 0), Difficulty::kEasy}};
  const std::vector<Detection> dets = {{box_at(0, 0), 0.3},
                                       {box_at(0, 0), 0.8}};
  const MatchResult m = match_detections(dets, gts, 0.5, Difficulty::kHard);
  CHECK(m.tp == 1);
  CHECK(m.fp == 1);
  CHECK(m.outcomes[1] == DetectionOutcome::kTruePositive);
  CHECK(m.outcomes[0] == DetectionOutcome::kFalsePositive);
}

TEST_CASE("match_detections: ignored ground truths suppress, never count") {
  const std::vector<GroundTruth> gts = {{box_at(0, 0), Difficulty::kIgnored}};
  const std::vector<Detection> dets = {{box_at(0, 0), 0.9}};
  const MatchResult m = match_detections(dets, gts, 0.5, Difficulty::kHard);
  CHECK(m.tp == 0);
  CHECK(m.fp == 0);
  CHECK(m.fn == 0);
  CHECK(m.num_countable_gts == 0);
  CHECK(m.outcomes[0] == DetectionOutcome::kIgnored);
}

TEST_CASE("match_detections: difficulty levels nest") {
  const std::vector<GroundTruth> gts = {{box_at(0, 0), Difficulty::kEasy},
                                        {box_at(20, 0), Difficulty::kHard}};
  const std::vector<Detection> dets = {{box_at(0, 0), 0.9},
                                       {box_at(20, 0), 0.8}};
  const MatchResult easy = match_detections(dets, gts, 0.5, Difficulty::kEasy);
  CHECK(easy.num_countable_gts == 1);
  CHECK(easy.tp == 1);  // the Hard gt is an ignore region at Easy
  const MatchResult hard = match_detections(dets, gts, 0.5, Difficulty::kHard);
  CHECK(hard.num_countable_gts == 2);
  CHECK(hard.tp == 2);
}

TEST_CASE("average_precision hand fixtures") {
  // one gt, one perfect detection
  const std::vector<FrameObjects> perfect = {
      {{{box_at(0, 0), 0.9}}, {{box_at(0, 0), Difficulty::kEasy}}}};
  CHECK(*average_precision(perfect, 0.7, Difficulty::kHard,
                           Interpolation::kElevenPoint) ==
        doctest::Approx(100.0));
  CHECK(*average_precision(perfect, 0.7, Difficulty::kHard,
                           Interpolation::kFortyPoint) ==
        doctest::Approx(100.0));

  // two gts, one detected: precision 1 up to recall 0.5 -> 6/11
  const std::vector<FrameObjects> half = {
      {{{box_at(0, 0), 0.9}},
       {{box_at(0, 0), Difficulty::kEasy},
        {box_at(20, 0), Difficulty::kEasy}}}};
  CHECK(*average_precision(half, 0.7, Difficulty::kHard,
                           Interpolation::kElevenPoint) ==
        doctest::Approx(100.0 * 6.0 / 11.0).epsilon(1e-6));
  CHECK(*average_precision(half, 0.7, Difficulty::kHard,
                           Interpolation::kFortyPoint) ==
        doctest::Approx(50.0).epsilon(1e-6));

  // no detections at all
  const std::vector<FrameObjects> none = {
      {{}, {{box_at(0, 0), Difficulty::kEasy}}}};
  CHECK(*average_precision(none, 0.7, Difficulty::kHard,
                           Interpolation::kElevenPoint) == 0.0);

  // no countable ground truth: undefined, not zero
  const std::vector<FrameObjects> empty = {{{{box_at(0, 0), 0.5}}, {}}};
  CHECK_FALSE(average_precision(empty, 0.7, Difficulty::kHard,
                                Interpolation::kElevenPoint)
                  .has_value());
}

namespace {

// Random pooled scenes with a mix of hits, misses, and false positives.
std::vector<FrameObjects> random_eval_frames(SeededRng& rng, int frames) {
  std::vector<FrameObjects> out;
  for (int f = 0; f < frames; ++f) {
    FrameObjects frame;
    const int gts = 1 + static_cast<int>(rng.uniform_index(5));
    for (int g = 0; g < gts; ++g) {
      const double x = rng.uniform_double(5, 60);
      const double y = rng.uniform_double(-15, 15);
      frame.ground_truths.push_back(
          {box_at(x, y), static_cast<Difficulty>(rng.uniform_index(3))});
      const double roll = rng.uniform_double();
      if (roll < 0.7) {  // detect with a small positional error
        Detection det{box_at(x + rng.uniform_double(-0.3, 0.3),
                             y + rng.uniform_double(-0.2, 0.2)),
                      rng.uniform_double(0.05, 1.0)};
        frame.detections.push_back(det);
      }
      if (roll > 0.8) {  // unrelated false positive
        frame.detections.push_back(
            {box_at(rng.uniform_double(80, 120), y), rng.uniform_double()});
      }
    }
    out.push_back(std::move(frame));
  }
  return out;
}

}  // namespace

TEST_CASE("AP is invariant under monotone score rescaling") {
  SeededRng rng(2025);
  const std::vector<FrameObjects> frames = random_eval_frames(rng, 12);
  const double base = *average_precision(frames, 0.5, Difficulty::kHard,
                                         Interpolation::kElevenPoint);
  std::vector<FrameObjects> rescaled = frames;
  for (FrameObjects& frame : rescaled) {
    for (Detection& det : frame.detections) {
      det.score = 3.0 * det.score + 7.0;
    }
  }
  CHECK(*average_precision(rescaled, 0.5, Difficulty::kHard,
                           Interpolation::kElevenPoint) ==
        doctest::Approx(base).epsilon(1e-12));

  std::vector<FrameObjects> exped = frames;
  for (FrameObjects& frame : exped) {
    for (Detection& det : frame.detections) det.score = std::exp(det.score);
  }
  CHECK(*average_precision(exped, 0.5, Difficulty::kHard,
                           Interpolation::kElevenPoint) ==
        doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("appending a lowest-score false positive never raises AP") {
  SeededRng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<FrameObjects> frames = random_eval_frames(rng, 6);
    const double base = *average_precision(frames, 0.5, Difficulty::kHard,
                                           Interpolation::kElevenPoint);
    frames[0].detections.push_back({box_at(500, 500), -1.0});
    const double with_fp = *average_precision(
        frames, 0.5, Difficulty::kHard, Interpolation::kElevenPoint);
    CHECK(with_fp <= base + 1e-12);
  }
}

TEST_CASE("AP over identical repeated frames equals single-frame AP") {
  SeededRng rng(7);
  const std::vector<FrameObjects> one = random_eval_frames(rng, 1);
  std::vector<FrameObjects> many;
  for (int i = 0; i < 5; ++i) many.push_back(one[0]);
  const auto ap_one = average_precision(one, 0.5, Difficulty::kHard,
                                        Interpolation::kElevenPoint);
  const auto ap_many = average_precision(many, 0.5, Difficulty::kHard,
                                         Interpolation::kElevenPoint);
  REQUIRE(ap_one.has_value());
  CHECK(*ap_many == doctest::Approx(*ap_one).epsilon(1e-12));
}

TEST_CASE("recall_iou_curve fixtures") {
  const std::vector<FrameObjects> perfect = {
      {{{box_at(0, 0), 0.9}}, {{box_at(0, 0), Difficulty::kEasy}}}};
  for (const RecallPoint& p :
       recall_iou_curve(perfect, {0.3, 0.5, 0.7, 0.9}, Difficulty::kHard)) {
    CHECK(p.recall == 1.0);
  }

  const std::vector<FrameObjects> nothing = {
      {{}, {{box_at(0, 0), Difficulty::kEasy}}}};
  for (const RecallPoint& p :
       recall_iou_curve(nothing, {0.3, 0.5, 0.7}, Difficulty::kHard)) {
    CHECK(p.recall == 0.0);
  }

  // det at IoU exactly 0.6 straddles thresholds 0.5 / 0.7
  const std::vector<FrameObjects> straddle = {
      {{{box_at(1, 0), 0.9}}, {{box_at(0, 0), Difficulty::kEasy}}}};
  const auto curve =
      recall_iou_curve(straddle, {0.5, 0.7}, Difficulty::kHard);
  REQUIRE(curve.size() == 2);
  CHECK(curve[0].recall == 1.0);
  CHECK(curve[1].recall == 0.0);

  CHECK_THROWS_AS(recall_iou_curve(straddle, {0.7, 0.5}, Difficulty::kHard),
                  ConfigError);
}

TEST_CASE("recall_iou_curve is non-increasing in the threshold") {
  SeededRng rng(123);
  const std::vector<FrameObjects> frames = random_eval_frames(rng, 15);
  const std::vector<double> thresholds = {0.1, 0.2, 0.3, 0.4, 0.5,
                                          0.6, 0.7, 0.8, 0.9};
  const auto curve = recall_iou_curve(frames, thresholds, Difficulty::kHard);
  REQUIRE(curve.size() == thresholds.size());
  for (std::size_t i = 1; i < curve.size(); ++i) {
    CHECK(curve[i].recall <= curve[i - 1].recall + 1e-12);
  }
}

TEST_CASE("recall_by_distance fixtures") {
  std::vector<FrameObjects> frames = {
      {{{box_at(5, 0), 0.9}},
       {{box_at(5, 0), Difficulty::kEasy},
        {box_at(15, 0), Difficulty::kEasy}}}};
  const auto bins = recall_by_distance(frames, {0, 10, 20}, 0.5,
                                       Difficulty::kHard);
  REQUIRE(bins.size() == 2);
  CHECK(bins[0].recall == 1.0);
  CHECK(bins[0].num_gts == 1);
  CHECK(bins[1].recall == 0.0);

  // empty bins are absent, not zero
  const auto sparse = recall_by_distance(frames, {0, 10, 20, 30, 40}, 0.5,
                                         Difficulty::kHard);
  REQUIRE(sparse.size() == 2);
  CHECK(sparse[0].lo == 0.0);
  CHECK(sparse[1].lo == 10.0);
}

TEST_CASE("recall_by_distance matches an independent per-object tally") {
  SeededRng rng(314);
  const std::vector<FrameObjects> frames = random_eval_frames(rng, 20);
  const std::vector<double> edges = {0, 10, 20, 30, 40, 50, 60, 70};
  const auto bins = recall_by_distance(frames, edges, 0.5, Difficulty::kHard);

  // Oracle: re-tally matched flags per bin straight from match_detections.
  std::vector<int> gts(edges.size() - 1, 0), hit(edges.size() - 1, 0);
  for (const FrameObjects& frame : frames) {
    const MatchResult m = match_detections(frame.detections,
                                           frame.ground_truths, 0.5,
                                           Difficulty::kHard);
    for (std::size_t g = 0; g < frame.ground_truths.size(); ++g) {
      const GroundTruth& gt = frame.ground_truths[g];
      if (gt.difficulty == Difficulty::kIgnored) continue;
      const double r = std::hypot(gt.box.center.x(), gt.box.center.y());
      for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
        if (r >= edges[b] && r < edges[b + 1]) {
          ++gts[b];
          if (m.gt_matched[g]) ++hit[b];
        }
      }
    }
  }
  std::size_t cursor = 0;
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    if (gts[b] == 0) continue;
    REQUIRE(cursor < bins.size());
    CHECK(bins[cursor].num_gts == gts[b]);
    CHECK(bins[cursor].recall ==
          doctest::Approx(static_cast<double>(hit[b]) / gts[b]));
    ++cursor;
  }
  CHECK(cursor == bins.size());
}

TEST_CASE("evaluate assembles per-class reports") {
  SeededRng rng(11);
  std::map<std::string, std::vector<FrameObjects>> by_class;
  by_class["Car"] = random_eval_frames(rng, 8);
  by_class["Pedestrian"] = {};
  MetricsOptions options;
  const EvaluationReport report = evaluate(by_class, options);
  REQUIRE(report.contains("Car"));
  const ClassEval& car = report.at("Car");
  CHECK(car.iou_threshold == 0.7);
  CHECK(car.num_ground_truths > 0);
  CHECK(car.ap.size() == 3);
  CHECK(car.recall_iou_all.size() ==
        options.recall_iou_thresholds.size());
  for (std::size_t i = 1; i < car.recall_iou_all.size(); ++i) {
    CHECK(car.recall_iou_all[i].recall <=
          car.recall_iou_all[i - 1].recall + 1e-12);
  }
  CHECK(report.at("Pedestrian").num_ground_truths == 0);
  CHECK_FALSE(report.at("Pedestrian").ap.at(Difficulty::kHard).has_value());
}
