#pragma once

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "pcqa/distortion.hpp"
#include "pcqa/projector.hpp"
#include "pcqa/ssvrn.hpp"
#include "pcqa/view_geometry.hpp"

namespace pcqa {

/// Quality of one projected image; higher is better.
using ImageScorer = std::function<double(const ProjectedImage&)>;

/// Called on every candidate image after rendering and before scoring.
using PostRenderHook = std::function<void(int candidate, ProjectedImage&)>;

ImageScorer ssvrn_scorer(const ScoreModel& model);

/// Which ladder member a cloud is. Level 0 is the reference.
struct VariantTag {
  std::string type;  ///< empty for the reference
  int level = 0;
  int levels = 0;
  std::uint64_t seed = 0;

  bool is_reference() const { return level == 0; }
  /// "reference" or "<type>_<level>".
  std::string label() const;
};

/// One (cloud variant, rig, face) entry of the default/optimized viewpoint set.
struct DovRecord {
  std::string cloud_id;
  VariantTag distortion;
  std::string cloud_file;  ///< variant PLY name inside the cloud store
  int rig = 0;
  int face_index = 0;
  Vec3 default_viewpoint = Vec3::Zero();
  Vec3 optimized_viewpoint = Vec3::Zero();
  std::vector<std::optional<double>> candidate_scores;  ///< nullopt for empty projections
  int optimized_index = 0;
  int candidate_rank_of_optimized = 0;  ///< 1 + candidates scoring strictly higher
  ViewSetup view;                       ///< the default view of the face
};

/// Competition rank (1 = best) of every scored candidate; 0 for excluded ones.
std::vector<int> competition_ranks(const std::vector<std::optional<double>>& scores);

/// Candidate shown at quality rank `rank` (1 = best, N = number of scored
/// candidates). Candidates are ordered by descending score; a tie group is
/// represented by its lowest index. Throws when nothing was scored.
int candidate_at_rank(const std::vector<std::optional<double>>& scores, int rank);

/// Scores of every candidate of a grid; empty projections score nullopt.
std::vector<std::optional<double>> score_candidates(const ImageScorer& scorer, const PointCloud& cloud,
                                                    const CandidateGrid& grid, const RenderConfig& cfg,
                                                    const PostRenderHook& hook = {});

/// Worst-scoring candidate (ties: smaller index). Empty candidates are
/// excluded; throws when every candidate is empty.
DovRecord select_optimized(const ImageScorer& scorer, const PointCloud& cloud, const CandidateGrid& grid,
                           const RenderConfig& cfg, const PostRenderHook& hook = {});

/// A cloud variant entering the dataset.
struct DovInput {
  PointCloud cloud;
  VariantTag distortion;
  std::string cloud_file;
};

/// Reference plus every variant of a ladder, with store file names.
std::vector<DovInput> dov_inputs(const DistortionLadder& ladder);

struct DovOptions {
  int candidates = 9;
  int rigs = 1;  ///< rig 0 is the canonical cube; more rigs add random rotations
  std::uint64_t seed = 0;
  RenderConfig render;
};

/// One record per (input, rig, face), sorted by (cloud_id, distortion, rig,
/// face). Viewpoints come from each variant's own bounding box; the rig
/// rotations depend on the cloud id and the seed only.
std::vector<DovRecord> build_dov(const std::vector<DovInput>& inputs, const ImageScorer& scorer,
                                 const DovOptions& opts);

nlohmann::json to_json(const DovRecord& r);
DovRecord dov_record_from_json(const nlohmann::json& j);

/// JSON-lines writer; writes a temporary sibling and renames it into place.
void write_dov(const std::vector<DovRecord>& records, const std::filesystem::path& path);
std::vector<DovRecord> read_dov(const std::filesystem::path& path);

/// Writes `text` to `path` atomically (temporary sibling + rename).
void write_file_atomic(const std::filesystem::path& path, const std::string& text);

}  // namespace pcqa
