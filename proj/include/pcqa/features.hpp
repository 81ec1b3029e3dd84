#pragma once

#include <Eigen/Core>

#include "pcqa/projector.hpp"

namespace pcqa {

/// Handcrafted statistics of the covered pixels of a projection.
///
/// Layout (24 entries):
///   [0..2]   color mean per channel, channels scaled to [0, 1]
///   [3..5]   color std per channel
///   [6..8]   gradient-magnitude mean per channel
///   [9..11]  gradient-magnitude std per channel
///   [12..14] depth mean, std, range, divided by the region half extent
///   [15]     coverage ratio
///   [16..23] luminance gradient-orientation histogram, magnitude weighted,
///            normalized to sum 1 (all zero for a flat image)
///
/// Gradients use central differences when both neighbors are covered, a
/// one-sided difference when only one is, and 0 otherwise. Uncovered pixels
/// never contribute.
struct ImageFeatures {
  Eigen::VectorXd values;
};

constexpr int kFeatureDim = 24;
constexpr int kOrientationBins = 8;

/// Throws Error("empty projection") when no pixel is covered.
ImageFeatures extract_features(const ProjectedImage& img);

}  // namespace pcqa
