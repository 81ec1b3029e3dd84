#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pcqa/distortion.hpp"
#include "pcqa/projector.hpp"
#include "pcqa/ssvrn.hpp"
#include "pcqa/view_geometry.hpp"

namespace pcqa {

/// Binomial coefficient C(n, 2).
constexpr std::uint64_t choose2(std::uint64_t n) { return n * (n - 1) / 2; }

/// Pairs per cloud: N viewpoints x T types x C(L + 1, 2).
constexpr std::uint64_t count_pairs(std::uint64_t viewpoints, std::uint64_t types, std::uint64_t levels) {
  return viewpoints * types * choose2(levels + 1);
}

/// Dataset-level pair arithmetic. `types` is the number of distortion groups
/// enumerated per cloud, which for some public datasets is a grouping of
/// their variants rather than a count of distortion kinds.
struct PairShape {
  std::uint64_t clouds = 0;
  std::uint64_t viewpoints = 0;
  std::uint64_t types = 0;
  std::uint64_t levels = 0;

  constexpr std::uint64_t total() const { return clouds * count_pairs(viewpoints, types, levels); }
};

/// 9 clouds, 6 faces x 9 candidates, 7 types, 6 levels.
constexpr PairShape kSjtuShape{9, 54, 7, 6};
/// 20 clouds, 54 viewpoints, 12 groups of 3 levels.
constexpr PairShape kWpcShape{20, 54, 12, 3};
/// 184 clouds, 54 viewpoints, one group of 5 levels.
constexpr PairShape kLsPcqaShape{184, 54, 1, 5};

struct ViewSlot {
  int rig = 0;
  int face = 0;
  int candidate = 0;
};

std::vector<ViewSlot> view_slots(const std::vector<CandidateGrid>& grids);

/// Pair identity without images: provenance plus label.
struct PairKey {
  PairProvenance provenance;
  double label = 0.0;
};

/// Every (viewpoint, type, unordered level pair among 0..L) for one cloud.
/// Orientation is a seeded coin flip per pair; the label follows it.
std::vector<PairKey> enumerate_pairs(const std::string& cloud_id, const std::vector<std::string>& type_names,
                                     int levels, const std::vector<ViewSlot>& slots, std::uint64_t seed);

nlohmann::json to_json(const PairKey& key);
PairKey pair_key_from_json(const nlohmann::json& j);

/// Pair key fields plus the feature vectors "a" and "b".
nlohmann::json to_json(const RankPair& pair);
RankPair rank_pair_from_json(const nlohmann::json& j);

/// JSON-lines pair manifest, written atomically.
void write_pairs(const std::vector<RankPair>& pairs, const std::filesystem::path& path);
std::vector<RankPair> read_pairs(const std::filesystem::path& path);

/// Thread-safe memo of image features keyed by (cloud, distortion, viewpoint,
/// render config). A cached nullopt marks an empty projection.
class FeatureCache {
 public:
  static std::string key(const std::string& cloud_id, const std::string& type, int level, int rig, int face,
                         int candidate, const RenderConfig& cfg);

  std::optional<std::optional<ImageFeatures>> find(const std::string& key) const;
  void put(const std::string& key, std::optional<ImageFeatures> feats);
  std::size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::optional<ImageFeatures>> entries_;
};

/// Renders and featurizes a view; nullopt when nothing is covered.
std::optional<ImageFeatures> features_or_empty(const PointCloud& cloud, const ViewSetup& view,
                                               const RenderConfig& cfg);

struct PairGenerationStats {
  std::size_t enumerated = 0;
  std::size_t skipped_empty = 0;
  std::size_t images_rendered = 0;
};

/// Materializes every enumerated pair of a ladder over the given grids.
/// Every image is rendered once (cfg.threads workers). Pairs touching an
/// empty projection are dropped and counted in `stats`.
std::vector<RankPair> generate_pairs(const DistortionLadder& ladder, const std::vector<CandidateGrid>& grids,
                                     const RenderConfig& cfg, std::uint64_t seed,
                                     FeatureCache* cache = nullptr, PairGenerationStats* stats = nullptr);

}  // namespace pcqa
