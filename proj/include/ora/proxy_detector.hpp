#pragma once

#include <vector>

#include "ora/error.hpp"
#include "ora/geometry.hpp"
#include "ora/point_cloud.hpp"

namespace ora {

/// Rule for the stand-in detector: a candidate box is "detected" when it
/// still holds at least min_points returns. Deliberately proposal-free
/// (candidates are supplied, normally the ground-truth boxes): it isolates
/// the point-removal mechanism from everything a learned detector adds,
/// and is not a substitute for neural-model results.
struct ProxyConfig {
  int min_points = 20;        // detection threshold tau, >= 1
  double score_scale = 100.0; // score = min(1, points / score_scale)

  void validate() const {
    if (min_points < 1) throw ConfigError("proxy min_points must be >= 1");
    if (!(score_scale > 0.0)) {
      throw ConfigError("proxy score_scale must be > 0");
    }
  }
};

struct ProxyDetection {
  std::size_t candidate_index = 0;  // into the candidate box list
  int num_points = 0;
  double score = 0.0;
};

/// Emits one detection per candidate box whose contained point count
/// reaches min_points; the box geometry is echoed unchanged.
std::vector<ProxyDetection> proxy_detect(
    const PointCloud& cloud, const std::vector<BoundingBox3D>& candidates,
    const ProxyConfig& config);

}  // namespace ora
