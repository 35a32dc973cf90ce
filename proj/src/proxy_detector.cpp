#include "ora/proxy_detector.hpp"

#include <algorithm>

namespace ora {

std::vector<ProxyDetection> proxy_detect(
    const PointCloud& cloud, const std::vector<BoundingBox3D>& candidates,
    const ProxyConfig& config) {
  config.validate();
  std::vector<ProxyDetection> detections;
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const int n = static_cast<int>(points_in_box(cloud, candidates[c]).size());
    if (n >= config.min_points) {
      detections.push_back(
          {c, n, std::min(1.0, n / config.score_scale)});
    }
  }
  return detections;
}

}  // namespace ora
