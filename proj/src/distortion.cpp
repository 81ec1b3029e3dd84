#include "pcqa/distortion.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "pcqa/parallel.hpp"
#include "pcqa/seeding.hpp"

namespace pcqa {

std::string kind_code(DistortionKind kind) {
  switch (kind) {
    case DistortionKind::ColorNoise:
      return "CN";
    case DistortionKind::GeometryGaussianNoise:
      return "GGN";
    case DistortionKind::Downsample:
      return "DS";
    case DistortionKind::OctreeQuantize:
      return "OT";
  }
  throw Error("unknown distortion kind");
}

DistortionKind kind_from_code(const std::string& code) {
  if (code == "CN") return DistortionKind::ColorNoise;
  if (code == "GGN") return DistortionKind::GeometryGaussianNoise;
  if (code == "DS") return DistortionKind::Downsample;
  if (code == "OT") return DistortionKind::OctreeQuantize;
  throw Error("unknown distortion kind '" + code + "'");
}

void DistortionSpec::validate() const {
  if (levels < 2) throw Error("distortion ladder needs at least 2 levels");
  if (level < 1 || level > levels) {
    throw Error("distortion level " + std::to_string(level) + " outside 1.." +
                std::to_string(levels));
  }
}

namespace severity {
double color_sigma(double intensity) { return 40.0 * intensity; }
double geometry_sigma(double intensity) { return 0.01 * intensity; }
double keep_fraction(double intensity) { return 1.0 - 0.8 * intensity; }
int octree_depth(double intensity) { return 10 - static_cast<int>(std::lround(6.0 * intensity)); }
}  // namespace severity

namespace {

std::uint8_t clamp_channel(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::round(v), 0.0, 255.0));
}

PointCloud color_noise(const PointCloud& in, double sigma, std::mt19937_64& rng) {
  PointCloud out = in;
  std::normal_distribution<double> noise(0.0, sigma);
  for (Rgb& c : out.colors) {
    c.r = clamp_channel(c.r + noise(rng));
    c.g = clamp_channel(c.g + noise(rng));
    c.b = clamp_channel(c.b + noise(rng));
  }
  return out;
}

PointCloud geometry_noise(const PointCloud& in, double sigma, std::mt19937_64& rng) {
  PointCloud out = in;
  std::normal_distribution<double> noise(0.0, sigma);
  for (Vec3& p : out.points) {
    p.x() += noise(rng);
    p.y() += noise(rng);
    p.z() += noise(rng);
  }
  return out;
}

PointCloud downsample(const PointCloud& in, double keep, std::mt19937_64& rng) {
  const std::size_t n = in.size();
  const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(n) * keep));
  const std::size_t kept = std::clamp<std::size_t>(target, 1, n);
  // Partial Fisher-Yates picks `kept` distinct indices; output keeps file order.
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t i = 0; i < kept; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  idx.resize(kept);
  std::sort(idx.begin(), idx.end());
  PointCloud out;
  out.id = in.id;
  out.points.reserve(kept);
  out.colors.reserve(kept);
  for (std::size_t i : idx) {
    out.points.push_back(in.points[i]);
    out.colors.push_back(in.colors[i]);
  }
  if (out.empty()) throw Error("downsample produced an empty cloud");
  return out;
}

// Cubic grid anchored at bbox_min with 2^depth cells along the longest axis.
PointCloud octree_quantize(const PointCloud& in, int depth) {
  const CloudSummary s = summarize(in);
  const double extent = (s.bbox_max - s.bbox_min).maxCoeff();
  if (extent <= 0.0) return in;
  const double step = extent / std::ldexp(1.0, depth);

  struct Cell {
    Vec3 node;
    std::array<std::uint64_t, 3> color_sum{};
    std::uint64_t count = 0;
  };
  struct KeyHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& k) const noexcept {
      std::uint64_t h = 0;
      for (auto v : k) h = hash_combine(h, static_cast<std::uint64_t>(v));
      return static_cast<std::size_t>(h);
    }
  };
  std::unordered_map<std::array<std::int64_t, 3>, std::size_t, KeyHash> index;
  std::vector<Cell> cells;
  for (std::size_t i = 0; i < in.size(); ++i) {
    std::array<std::int64_t, 3> key{};
    Vec3 node;
    for (int a = 0; a < 3; ++a) {
      key[a] = std::llround((in.points[i][a] - s.bbox_min[a]) / step);
      node[a] = s.bbox_min[a] + static_cast<double>(key[a]) * step;
    }
    auto [it, inserted] = index.try_emplace(key, cells.size());
    if (inserted) cells.push_back(Cell{node, {}, 0});
    Cell& c = cells[it->second];
    c.color_sum[0] += in.colors[i].r;
    c.color_sum[1] += in.colors[i].g;
    c.color_sum[2] += in.colors[i].b;
    ++c.count;
  }
  PointCloud out;
  out.id = in.id;
  out.points.reserve(cells.size());
  out.colors.reserve(cells.size());
  for (const Cell& c : cells) {
    out.points.push_back(c.node);
    const double n = static_cast<double>(c.count);
    out.colors.push_back({clamp_channel(c.color_sum[0] / n), clamp_channel(c.color_sum[1] / n),
                          clamp_channel(c.color_sum[2] / n)});
  }
  return out;
}

}  // namespace

PointCloud apply_distortion(const PointCloud& cloud, const DistortionSpec& spec) {
  if (cloud.empty()) throw Error("empty cloud");
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const double alpha = spec.intensity();
  switch (spec.kind) {
    case DistortionKind::ColorNoise:
      return color_noise(cloud, severity::color_sigma(alpha), rng);
    case DistortionKind::GeometryGaussianNoise: {
      const double diag = summarize(cloud).diagonal;
      return geometry_noise(cloud, severity::geometry_sigma(alpha) * diag, rng);
    }
    case DistortionKind::Downsample:
      return downsample(cloud, severity::keep_fraction(alpha), rng);
    case DistortionKind::OctreeQuantize:
      return octree_quantize(cloud, severity::octree_depth(alpha));
  }
  throw Error("unknown distortion kind");
}

std::string DistortionType::name() const {
  std::string out;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (i) out += '+';
    out += kind_code(stages[i]);
  }
  return out;
}

DistortionType DistortionType::parse(const std::string& name) {
  DistortionType t;
  std::stringstream in(name);
  std::string part;
  while (std::getline(in, part, '+')) t.stages.push_back(kind_from_code(part));
  if (t.stages.empty()) throw Error("empty distortion type");
  return t;
}

PointCloud apply_type(const PointCloud& cloud, const DistortionType& type, int level, int levels,
                      std::uint64_t seed) {
  if (type.stages.empty()) throw Error("empty distortion type");
  if (type.stages.size() == 1) {
    return apply_distortion(cloud, {type.stages[0], level, levels, seed});
  }
  PointCloud out = cloud;
  for (std::size_t k = 0; k < type.stages.size(); ++k) {
    out = apply_distortion(out, {type.stages[k], level, levels, hash_combine(seed, k)});
  }
  return out;
}

const PointCloud& DistortionLadder::at(std::size_t type_index, int level) const {
  if (level == 0) return reference;
  if (type_index >= types.size() || level < 1 || level > levels) {
    throw Error("ladder index out of range");
  }
  return variants[type_index * static_cast<std::size_t>(levels) + static_cast<std::size_t>(level - 1)]
      .cloud;
}

std::uint64_t variant_seed(std::uint64_t seed, const DistortionType& type, int level) {
  return seed ^ hash_combine(hash_name(type.name()), static_cast<std::uint64_t>(level));
}

DistortionLadder build_ladder(const PointCloud& cloud, const std::vector<DistortionType>& types,
                              int levels, std::uint64_t seed, unsigned threads) {
  if (levels < 2) throw Error("distortion ladder needs at least 2 levels");
  if (types.empty()) throw Error("distortion ladder needs at least one type");
  cloud.validate();
  DistortionLadder ladder;
  ladder.reference = cloud;
  ladder.types = types;
  ladder.levels = levels;
  ladder.variants.resize(types.size() * static_cast<std::size_t>(levels));
  parallel_for(ladder.variants.size(), threads, [&](std::size_t i) {
    const DistortionType& type = types[i / levels];
    const int level = static_cast<int>(i % levels) + 1;
    LadderVariant& v = ladder.variants[i];
    v.type = type;
    v.level = level;
    v.seed = variant_seed(seed, type, level);
    v.cloud = apply_type(cloud, type, level, levels, v.seed);
    v.cloud.id = cloud.id;
  });
  return ladder;
}

std::string variant_file_name(const std::string& id, const std::string& type_name, int level) {
  return id + "__" + type_name + "_" + std::to_string(level) + ".ply";
}

void save_ladder(const DistortionLadder& ladder, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  save_ply(dir / variant_file_name(ladder.reference.id, "ref", 0), ladder.reference);
  for (const LadderVariant& v : ladder.variants) {
    save_ply(dir / variant_file_name(ladder.reference.id, v.type.name(), v.level), v.cloud);
  }
}

double pseudo_mos(int level, int levels) {
  if (level <= 0) return 100.0;
  return 100.0 * (1.0 - static_cast<double>(level) / (levels + 1));
}

}  // namespace pcqa
