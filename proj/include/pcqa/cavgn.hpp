#pragma once

// Content-aware viewpoint generator: multi-scale neighborhood features of the
// whole cloud, refined per default viewpoint, regressed to an in-plane offset.
// Tokens are matrix columns throughout.

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "pcqa/dov.hpp"
#include "pcqa/nn.hpp"

namespace pcqa {

enum class FeatureChannel { Geometry, Texture };

constexpr int kStageCount = 3;
constexpr int kGeometryStats = 5;  ///< log1p(count), offset / radius, 3 eigenvalue ratios
constexpr int kTextureStats = 6;   ///< color mean and std per channel, in [0, 1]
constexpr int kViewEncoding = 6;   ///< direction, plane position (u, v) / h, face / 5
constexpr int kEmbedWidth = 8;
constexpr int kTokenWidth = 32;
constexpr int kFusedWidth = 2 * kTokenWidth;

int stat_width(FeatureChannel channel);

/// Deterministic farthest-point sampling seeded by index 0; ties keep the
/// lower index. Throws when k exceeds the point count or k < 1.
std::vector<std::size_t> farthest_point_sample(const PointCloud& cloud, int k);

/// Neighborhood radius of stage `stage` (1-based): 0.02 * 2^(stage-1) * diagonal.
double stage_radius(const CloudSummary& summary, int stage);

/// Fixed per-token statistics of the three stages (stat_width x K each).
struct StageStats {
  FeatureChannel channel = FeatureChannel::Geometry;
  std::vector<std::size_t> tokens;
  std::array<Eigen::MatrixXd, kStageCount> stats;

  int token_count() const { return static_cast<int>(tokens.size()); }
};

StageStats compute_stage_stats(const PointCloud& cloud, FeatureChannel channel, int tokens);

/// Geometry and texture statistics of one cloud.
struct CloudFeatures {
  StageStats geometry;
  StageStats texture;
};

CloudFeatures compute_cloud_features(const PointCloud& cloud, int tokens);

struct MultiScaleFeatures {
  Eigen::MatrixXd f_c;  ///< [f_1; f_2; f_3], 3w x K
  Eigen::VectorXd f_p;  ///< max over tokens of f_c
  Eigen::MatrixXd F;    ///< [f_c; f_p repeated], 6w x K
  std::vector<Eigen::Index> argmax;  ///< token providing each entry of f_p (first on ties)
};

/// Learnable part of one branch.
struct BranchParams {
  nn::Mlp stage2;  ///< w -> w, identity: f_2 = s_2 + W f_1 + b
  nn::Mlp stage3;  ///< w -> w, identity: f_3 = s_3 + W f_2 + b
  nn::Mlp embed;   ///< view encoding -> 8, ReLU
  nn::Mlp focus;   ///< 6w + 8 -> 32 -> 32 -> 32, leaky ReLU
  Eigen::MatrixXd wq, wk, wv;  ///< 32 x 32 attention maps

  static BranchParams make(FeatureChannel channel, std::uint64_t seed);
  BranchParams zeros_like() const;
  void append_params(nn::ParamSpans& out);
};

MultiScaleFeatures expand_features(const BranchParams& p, const StageStats& s);

/// Softmax attention with a residual: Y = H + V A^T, where
/// A = rowsoftmax(Q^T K / sqrt(32)), Q = Wq H, K = Wk H, V = Wv H.
struct AttentionTape {
  Eigen::MatrixXd h, q, k, v, a;
};
Eigen::MatrixXd attention_forward(const Eigen::MatrixXd& wq, const Eigen::MatrixXd& wk, const Eigen::MatrixXd& wv,
                                  const Eigen::MatrixXd& h, AttentionTape* tape = nullptr);

/// The 6-vector fed to the view embedding.
Eigen::VectorXd encode_view(const ViewSetup& view);

struct CavgnHyperparams {
  double learning_rate = 1e-5;
  int epochs = 30;
  int decay_every = 2;
  double decay = 0.2;
  int batch_size = 1;
  double train_fraction = 0.8;
  int tokens = 64;
};

struct CavgnModel {
  BranchParams geometry;
  BranchParams texture;
  nn::Mlp head;  ///< 64 -> 32 -> 32 -> 16 -> 2, ReLU x3, last layer zero at init
  std::uint64_t seed = 0;
  CavgnHyperparams hp;

  static CavgnModel initialize(std::uint64_t seed, const CavgnHyperparams& hp = {});
  CavgnModel zeros_like() const;
  nn::ParamSpans params();
};

/// Fused feature F_i of one default view (64 entries).
Eigen::VectorXd constrain(const CavgnModel& model, const CloudFeatures& feats, const ViewSetup& view);

/// Clamps (u, v) to [-h, h]^2 and lifts it onto the region plane of `view`.
Vec3 place_on_region(const ViewSetup& view, double u, double v);

/// Head output scaled by h, clamped, lifted onto the region plane.
Vec3 generate_viewpoint(const CavgnModel& model, const Eigen::VectorXd& fused, const ViewSetup& view);

/// Full forward pass for one default view.
Vec3 predict_viewpoint(const CavgnModel& model, const CloudFeatures& feats, const ViewSetup& view);

/// 1 - cos of the angle between v_o - c and v_hat - c.
double angle_loss(const Vec3& v_o, const Vec3& v_hat, const Vec3& c);

/// One training example: default view (its center is the cloud centroid)
/// and target optimized viewpoint.
struct CavgnSample {
  const CloudFeatures* features = nullptr;
  ViewSetup view;
  Vec3 target = Vec3::Zero();
  std::string id;
};

/// Mean angle loss over `samples`; accumulates parameter gradients into
/// `grad` when given.
double cavgn_objective(const CavgnModel& model, std::span<const CavgnSample> samples, CavgnModel* grad);

/// Point clouds by store file name, loaded lazily from a directory.
class CloudStore {
 public:
  CloudStore() = default;
  explicit CloudStore(std::filesystem::path dir) : dir_(std::move(dir)) {}
  void add(const std::string& name, PointCloud cloud);
  const PointCloud& get(const std::string& name);

 private:
  std::filesystem::path dir_;
  std::map<std::string, PointCloud> clouds_;
};

struct CavgnEpochStats {
  int epoch = 0;
  double learning_rate = 0.0;
  double train_loss = 0.0;
  double val_loss = 0.0;
};

struct CavgnTraining {
  CavgnModel model;
  double untrained_val_loss = 0.0;
  std::vector<CavgnEpochStats> history;
  std::vector<std::size_t> train_indices;
  std::vector<std::size_t> val_indices;
};

/// Features of every distinct record cloud, keyed by store file name.
std::map<std::string, CloudFeatures> record_features(const std::vector<DovRecord>& records, CloudStore& store,
                                                     int tokens, unsigned threads = 1);

std::vector<CavgnSample> make_samples(const std::vector<DovRecord>& records,
                                      const std::map<std::string, CloudFeatures>& features);

CavgnTraining train_cavgn(std::span<const CavgnSample> samples, const CavgnHyperparams& hp, std::uint64_t seed);

nlohmann::json to_json(const CavgnModel& m);
CavgnModel cavgn_model_from_json(const nlohmann::json& j);

}  // namespace pcqa
