#pragma once

#include <random>
#include <vector>

#include "pcqa/ssvrn.hpp"

namespace pcqa::testing {

inline ImageFeatures random_features(std::mt19937_64& rng, int dim = kFeatureDim) {
  std::normal_distribution<double> n(0.0, 1.0);
  ImageFeatures f{Eigen::VectorXd(dim)};
  for (int i = 0; i < dim; ++i) f.values[i] = n(rng);
  return f;
}

/// Two views of the same content: b copies a with small jitter, and feature 0
/// encodes quality (higher is better). Orientation is random.
inline std::vector<RankPair> separable_pairs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution flip(0.5);
  std::uniform_real_distribution<double> gap(0.2, 1.0);
  std::normal_distribution<double> jitter(0.0, 1.0);
  std::vector<RankPair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    RankPair p;
    p.a = random_features(rng);
    p.b = p.a;
    for (Eigen::Index k = 1; k < p.b.values.size(); ++k) p.b.values[k] += 0.05 * jitter(rng);
    const double g = gap(rng);
    p.b.values[0] = p.a.values[0] - g;
    p.label = 1.0;
    if (flip(rng)) {
      std::swap(p.a, p.b);
      p.label = 0.0;
    }
    pairs.push_back(std::move(p));
  }
  return pairs;
}

/// Random features with coin-flip labels.
inline std::vector<RankPair> null_pairs(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution flip(0.5);
  std::vector<RankPair> pairs;
  for (std::size_t i = 0; i < n; ++i) {
    pairs.push_back({random_features(rng), random_features(rng), flip(rng) ? 1.0 : 0.0, {}});
  }
  return pairs;
}

}  // namespace pcqa::testing
