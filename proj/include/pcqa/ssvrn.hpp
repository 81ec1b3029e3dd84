#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "pcqa/features.hpp"
#include "pcqa/nn.hpp"

namespace pcqa {

struct ScoreHyperparams {
  double learning_rate = 1e-4;
  int epochs = 100;
  int decay_every = 10;
  double decay = 0.9;
  int batch_size = 16;
  double train_fraction = 0.8;
};

/// Projected-image quality scorer shared by both branches of the pairwise
/// ranker: standardized features -> 32 -> 16 -> 1 with ReLU, ReLU, sigmoid.
struct ScoreModel {
  Eigen::VectorXd input_shift;  ///< subtracted from features
  Eigen::VectorXd input_scale;  ///< then multiplied elementwise
  nn::Mlp mlp;
  std::uint64_t seed = 0;
  ScoreHyperparams hp;

  static ScoreModel initialize(std::uint64_t seed, int feature_dim = kFeatureDim);
  /// All weights zero, identity standardization; scores 0.5 everywhere.
  static ScoreModel zeros(int feature_dim = kFeatureDim);

  ScoreModel zeros_like() const;
  /// Trainable parameters only (the standardization is fixed).
  nn::ParamSpans params();
  double score(const ImageFeatures& feats) const;
};

/// e^(s_a - s_b) / (1 + e^(s_a - s_b)), evaluated without overflow.
double rank_probability(double s_a, double s_b);

/// Cross entropy with P clamped to [1e-12, 1 - 1e-12].
double pair_loss(double p_ab, double label);

/// Where a pair came from. level 0 is the reference cloud.
struct PairProvenance {
  std::string cloud_id;
  std::string kind;
  int level_a = 0;
  int level_b = 0;
  int rig = 0;
  int face = 0;
  int candidate_index = 0;

  friend bool operator==(const PairProvenance&, const PairProvenance&) = default;
};

/// label is 1 iff image a has the strictly lower distortion level.
struct RankPair {
  ImageFeatures a;
  ImageFeatures b;
  double label = 0.0;
  PairProvenance provenance;
};

/// Mean pair loss over `pairs`. When `grad` is non-null it receives the
/// gradient with respect to every trainable parameter (shapes of `model`).
double pair_objective(const ScoreModel& model, std::span<const RankPair> pairs, ScoreModel* grad);

/// Correct iff (score_a > score_b) == (label == 1); ties count as wrong.
double ranking_accuracy(const ScoreModel& model, std::span<const RankPair> pairs);

struct EpochStats {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double train_accuracy = 0.0;
  double val_accuracy = 0.0;
};

struct ScoreTraining {
  ScoreModel model;
  std::vector<EpochStats> history;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> val_indices;
};

/// Adam on mean pair loss. The split and batch order are drawn from `seed`;
/// feature standardization is fitted on the training split.
ScoreTraining train_ssvrn(std::span<const RankPair> pairs, const ScoreHyperparams& hp,
                          std::uint64_t seed);

nlohmann::json to_json(const ScoreModel& model);
ScoreModel score_model_from_json(const nlohmann::json& j);

}  // namespace pcqa
