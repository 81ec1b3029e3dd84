#include "pcqa/pairs.hpp"

#include <atomic>
#include <fstream>
#include <random>
#include <sstream>
#include <tuple>

#include "pcqa/dov.hpp"
#include "pcqa/parallel.hpp"
#include "pcqa/seeding.hpp"

namespace pcqa {

std::vector<ViewSlot> view_slots(const std::vector<CandidateGrid>& grids) {
  std::vector<ViewSlot> slots;
  for (const CandidateGrid& g : grids) {
    for (int j = 0; j < g.count; ++j) slots.push_back({g.rig, g.base.face_index, j});
  }
  return slots;
}

std::vector<PairKey> enumerate_pairs(const std::string& cloud_id, const std::vector<std::string>& type_names,
                                     int levels, const std::vector<ViewSlot>& slots, std::uint64_t seed) {
  if (levels < 1) throw Error("need at least one distortion level");
  std::mt19937_64 rng(hash_combine(derive_seed(seed, "pairs.orientation"), hash_name(cloud_id)));
  std::bernoulli_distribution flip(0.5);
  std::vector<PairKey> keys;
  keys.reserve(count_pairs(slots.size(), type_names.size(), static_cast<std::uint64_t>(levels)));
  for (const ViewSlot& slot : slots) {
    for (const std::string& type : type_names) {
      for (int lo = 0; lo <= levels; ++lo) {
        for (int hi = lo + 1; hi <= levels; ++hi) {
          PairKey k;
          k.provenance = {cloud_id, type, lo, hi, slot.rig, slot.face, slot.candidate};
          k.label = 1.0;
          if (flip(rng)) {
            std::swap(k.provenance.level_a, k.provenance.level_b);
            k.label = 0.0;
          }
          keys.push_back(std::move(k));
        }
      }
    }
  }
  return keys;
}

nlohmann::json to_json(const PairKey& key) {
  const PairProvenance& p = key.provenance;
  return {{"cloud_id", p.cloud_id}, {"kind", p.kind},   {"level_a", p.level_a},
          {"level_b", p.level_b},   {"rig", p.rig},     {"face", p.face},
          {"candidate_index", p.candidate_index},       {"label", static_cast<int>(key.label)}};
}

PairKey pair_key_from_json(const nlohmann::json& j) {
  PairKey k;
  k.provenance.cloud_id = j.at("cloud_id").get<std::string>();
  k.provenance.kind = j.at("kind").get<std::string>();
  k.provenance.level_a = j.at("level_a").get<int>();
  k.provenance.level_b = j.at("level_b").get<int>();
  k.provenance.rig = j.value("rig", 0);
  k.provenance.face = j.at("face").get<int>();
  k.provenance.candidate_index = j.at("candidate_index").get<int>();
  k.label = j.at("label").get<double>();
  return k;
}

nlohmann::json to_json(const RankPair& pair) {
  nlohmann::json j = to_json(PairKey{pair.provenance, pair.label});
  j["a"] = std::vector<double>(pair.a.values.begin(), pair.a.values.end());
  j["b"] = std::vector<double>(pair.b.values.begin(), pair.b.values.end());
  return j;
}

RankPair rank_pair_from_json(const nlohmann::json& j) {
  const PairKey k = pair_key_from_json(j);
  auto features = [&](const char* name) {
    const auto v = j.at(name).get<std::vector<double>>();
    if (v.size() != static_cast<std::size_t>(kFeatureDim)) {
      throw Error(std::string("pair feature '") + name + "' has " + std::to_string(v.size()) + " entries");
    }
    return ImageFeatures{Eigen::Map<const Eigen::VectorXd>(v.data(), kFeatureDim)};
  };
  return {features("a"), features("b"), k.label, k.provenance};
}

void write_pairs(const std::vector<RankPair>& pairs, const std::filesystem::path& path) {
  std::string text;
  for (const RankPair& p : pairs) text += to_json(p).dump() + "\n";
  write_file_atomic(path, text);
}

std::vector<RankPair> read_pairs(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<RankPair> out;
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.empty()) continue;
    try {
      out.push_back(rank_pair_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, path.string() + ": " + e.what());
    } catch (const Error& e) {
      throw ParseError(line_no, path.string() + ": " + e.what());
    }
  }
  return out;
}

std::string FeatureCache::key(const std::string& cloud_id, const std::string& type, int level, int rig, int face,
                              int candidate, const RenderConfig& cfg) {
  std::ostringstream s;
  s << cloud_id << '|' << (level == 0 ? std::string("ref") : type) << '|' << level << '|' << rig << '|' << face
    << '|' << candidate << '|' << cfg.resolution << '|' << cfg.splat_radius << '|' << cfg.margin;
  return s.str();
}

std::optional<std::optional<ImageFeatures>> FeatureCache::find(const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void FeatureCache::put(const std::string& key, std::optional<ImageFeatures> feats) {
  std::lock_guard lock(mutex_);
  entries_.insert_or_assign(key, std::move(feats));
}

std::size_t FeatureCache::size() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::optional<ImageFeatures> features_or_empty(const PointCloud& cloud, const ViewSetup& view,
                                               const RenderConfig& cfg) {
  const ProjectedImage img = render(cloud, view, cfg);
  if (img.covered() == 0) return std::nullopt;
  return extract_features(img);
}

std::vector<RankPair> generate_pairs(const DistortionLadder& ladder, const std::vector<CandidateGrid>& grids,
                                     const RenderConfig& cfg, std::uint64_t seed, FeatureCache* cache,
                                     PairGenerationStats* stats) {
  cfg.validate();
  std::vector<std::string> type_names;
  for (const DistortionType& t : ladder.types) type_names.push_back(t.name());
  const std::string& id = ladder.reference.id;
  const std::vector<PairKey> keys = enumerate_pairs(id, type_names, ladder.levels, view_slots(grids), seed);

  // Distinct images: reference once per view, then every (type, level) per view.
  struct Job {
    std::size_t type_index;
    int level;
    std::size_t grid;
    int candidate;
  };
  std::vector<Job> jobs;
  std::map<std::tuple<int, int, int, int, int>, std::size_t> job_of;  // (type or -1, level, rig, face, cand)
  for (std::size_t g = 0; g < grids.size(); ++g) {
    for (int j = 0; j < grids[g].count; ++j) {
      auto add = [&](int t, int level) {
        job_of.emplace(std::tuple{t, level, grids[g].rig, grids[g].base.face_index, j}, jobs.size());
        jobs.push_back({static_cast<std::size_t>(std::max(t, 0)), level, g, j});
      };
      add(-1, 0);
      for (std::size_t t = 0; t < ladder.types.size(); ++t) {
        for (int level = 1; level <= ladder.levels; ++level) add(static_cast<int>(t), level);
      }
    }
  }

  FeatureCache local;
  FeatureCache& store = cache ? *cache : local;
  std::vector<std::optional<ImageFeatures>> feats(jobs.size());
  std::atomic<std::size_t> rendered{0};
  parallel_for(jobs.size(), cfg.threads, [&](std::size_t i) {
    const Job& job = jobs[i];
    const CandidateGrid& grid = grids[job.grid];
    const std::string k = FeatureCache::key(id, type_names[job.type_index], job.level, grid.rig,
                                            grid.base.face_index, job.candidate, cfg);
    if (auto hit = store.find(k)) {
      feats[i] = std::move(*hit);
      return;
    }
    feats[i] = features_or_empty(ladder.at(job.type_index, job.level), grid.views[job.candidate], cfg);
    store.put(k, feats[i]);
    ++rendered;
  });

  std::map<std::string, std::size_t> type_index;
  for (std::size_t t = 0; t < type_names.size(); ++t) type_index[type_names[t]] = t;
  auto lookup = [&](const PairProvenance& p, int level) -> const std::optional<ImageFeatures>& {
    const int t = level == 0 ? -1 : static_cast<int>(type_index.at(p.kind));
    return feats[job_of.at({t, level, p.rig, p.face, p.candidate_index})];
  };

  std::vector<RankPair> pairs;
  pairs.reserve(keys.size());
  std::size_t skipped = 0;
  for (const PairKey& k : keys) {
    const auto& fa = lookup(k.provenance, k.provenance.level_a);
    const auto& fb = lookup(k.provenance, k.provenance.level_b);
    if (!fa || !fb) {
      ++skipped;
      continue;
    }
    pairs.push_back({*fa, *fb, k.label, k.provenance});
  }
  if (stats) {
    stats->enumerated = keys.size();
    stats->skipped_empty = skipped;
    stats->images_rendered = rendered.load();
  }
  return pairs;
}

}  // namespace pcqa
