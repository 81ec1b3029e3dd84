#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pcqa/cloud.hpp"

namespace pcqa {

enum class DistortionKind { ColorNoise, GeometryGaussianNoise, Downsample, OctreeQuantize };

/// Short code used in file names and manifests: CN, GGN, DS, OT.
std::string kind_code(DistortionKind kind);
DistortionKind kind_from_code(const std::string& code);

struct DistortionSpec {
  DistortionKind kind = DistortionKind::ColorNoise;
  int level = 1;
  int levels = 2;  ///< L
  std::uint64_t seed = 0;

  /// Throws Error unless 1 <= level <= levels and levels >= 2.
  void validate() const;
  double intensity() const { return static_cast<double>(level) / levels; }
};

/// Level-to-parameter maps. Intensity is level / L.
namespace severity {
double color_sigma(double intensity);      ///< channel units
double geometry_sigma(double intensity);   ///< fraction of bbox diagonal
double keep_fraction(double intensity);
int octree_depth(double intensity);        ///< log2 of cells per axis
}  // namespace severity

PointCloud apply_distortion(const PointCloud& cloud, const DistortionSpec& spec);

/// One distortion type of a ladder. A single kind, or a sequential
/// composition such as DS+CN for mixed distortions.
struct DistortionType {
  std::vector<DistortionKind> stages;

  std::string name() const;  ///< "CN", "DS+GGN", ...
  static DistortionType parse(const std::string& name);
  friend bool operator==(const DistortionType&, const DistortionType&) = default;
};

/// Applies each stage in order at the same level; stage k uses a seed mixed
/// from `seed` and k.
PointCloud apply_type(const PointCloud& cloud, const DistortionType& type, int level, int levels,
                      std::uint64_t seed);

struct LadderVariant {
  DistortionType type;
  int level = 1;
  std::uint64_t seed = 0;
  PointCloud cloud;
};

/// Reference plus T x L degraded copies, kind-major and level-minor.
/// Level 0 is the reference itself.
struct DistortionLadder {
  PointCloud reference;
  std::vector<DistortionType> types;
  int levels = 0;
  std::vector<LadderVariant> variants;

  std::size_t type_count() const { return types.size(); }
  /// level 0 returns the reference.
  const PointCloud& at(std::size_t type_index, int level) const;
};

/// Seed of one variant: seed xor hash(type, level).
std::uint64_t variant_seed(std::uint64_t seed, const DistortionType& type, int level);

DistortionLadder build_ladder(const PointCloud& cloud, const std::vector<DistortionType>& types,
                              int levels, std::uint64_t seed, unsigned threads = 1);

/// `<id>__<type>_<level>.ply`; the reference is written as `<id>__ref_0.ply`.
std::string variant_file_name(const std::string& id, const std::string& type_name, int level);

/// Writes the reference and every variant into `dir`.
void save_ladder(const DistortionLadder& ladder, const std::filesystem::path& dir);

/// Pseudo mean opinion score for a level of an L-level ladder:
/// 100 * (1 - level / (L + 1)); the reference (level 0) scores 100.
double pseudo_mos(int level, int levels);

}  // namespace pcqa
