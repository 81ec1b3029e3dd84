#include "pcqa/cloud.hpp"

#include <algorithm>
#include <cmath>

namespace pcqa {

void PointCloud::validate() const {
  if (points.empty()) throw Error("empty cloud");
  if (points.size() != colors.size()) {
    throw Error("cloud '" + id + "': " + std::to_string(points.size()) +
                " points but " + std::to_string(colors.size()) + " colors");
  }
  for (std::size_t i = 0; i < points.size(); ++i) {
    if (!points[i].allFinite()) {
      throw Error("cloud '" + id + "': non-finite coordinate at point " +
                  std::to_string(i));
    }
  }
}

double CloudSummary::max_half_extent() const {
  return 0.5 * (bbox_max - bbox_min).maxCoeff();
}

CloudSummary summarize(const PointCloud& cloud) {
  if (cloud.empty()) throw Error("empty cloud");
  CloudSummary s;
  s.bbox_min = cloud.points.front();
  s.bbox_max = cloud.points.front();
  Vec3 sum = Vec3::Zero();
  for (const Vec3& p : cloud.points) {
    sum += p;
    s.bbox_min = s.bbox_min.cwiseMin(p);
    s.bbox_max = s.bbox_max.cwiseMax(p);
  }
  s.centroid = sum / static_cast<double>(cloud.size());
  // Rounding in the mean can push a coordinate a hair outside the box.
  s.centroid = s.centroid.cwiseMax(s.bbox_min).cwiseMin(s.bbox_max);
  s.diagonal = (s.bbox_max - s.bbox_min).norm();
  return s;
}

}  // namespace pcqa
