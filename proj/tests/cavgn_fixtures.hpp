#pragma once

#include <memory>
#include <vector>

#include "pcqa/cavgn.hpp"
#include "pcqa/synthetic.hpp"

namespace pcqa::testing {

/// Synthetic clouds with precomputed features and one sample per cube face
/// whose target sits at plane offset (du, dv) * h of the default view.
struct OffsetDataset {
  std::vector<std::unique_ptr<CloudFeatures>> features;
  std::vector<CavgnSample> samples;
};

inline OffsetDataset offset_dataset(int clouds, std::size_t points, int tokens, double du, double dv,
                                    std::uint64_t seed) {
  OffsetDataset d;
  for (int c = 0; c < clouds; ++c) {
    const PointCloud cloud = make_synthetic_cloud(c, points, seed + c);
    d.features.push_back(std::make_unique<CloudFeatures>(compute_cloud_features(cloud, tokens)));
    for (const ViewSetup& view : default_viewpoints(summarize(cloud), 1.25)) {
      const double h = view.region_half_extent;
      d.samples.push_back({d.features.back().get(), view, lift(view, du * h, dv * h),
                           cloud.id + " face " + std::to_string(view.face_index)});
    }
  }
  return d;
}

}  // namespace pcqa::testing
