#include "pcqa/dov.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pcqa/features.hpp"
#include "pcqa/parallel.hpp"

namespace pcqa {

ImageScorer ssvrn_scorer(const ScoreModel& model) {
  return [model](const ProjectedImage& img) { return model.score(extract_features(img)); };
}

std::string VariantTag::label() const {
  return is_reference() ? std::string("reference") : type + "_" + std::to_string(level);
}

std::vector<int> competition_ranks(const std::vector<std::optional<double>>& scores) {
  std::vector<int> ranks(scores.size(), 0);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!scores[i]) continue;
    int higher = 0;
    for (const auto& s : scores) higher += s && *s > *scores[i];
    ranks[i] = 1 + higher;
  }
  return ranks;
}

int candidate_at_rank(const std::vector<std::optional<double>>& scores, int rank) {
  std::vector<int> order;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i]) order.push_back(static_cast<int>(i));
  }
  if (order.empty()) throw Error("no candidate produced a non-empty projection");
  if (rank < 1 || rank > static_cast<int>(order.size())) {
    throw Error("rank " + std::to_string(rank) + " outside 1.." + std::to_string(order.size()));
  }
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return *scores[a] > *scores[b]; });
  // The stable sort keeps each tie group in index order.
  const double s = *scores[order[rank - 1]];
  return *std::find_if(order.begin(), order.end(), [&](int i) { return *scores[i] == s; });
}

std::vector<std::optional<double>> score_candidates(const ImageScorer& scorer, const PointCloud& cloud,
                                                    const CandidateGrid& grid, const RenderConfig& cfg,
                                                    const PostRenderHook& hook) {
  std::vector<std::optional<double>> scores(grid.views.size());
  for (std::size_t j = 0; j < grid.views.size(); ++j) {
    ProjectedImage img = render(cloud, grid.views[j], cfg);
    if (hook) hook(static_cast<int>(j), img);
    if (img.covered() == 0) continue;
    scores[j] = scorer(img);
  }
  return scores;
}

DovRecord select_optimized(const ImageScorer& scorer, const PointCloud& cloud, const CandidateGrid& grid,
                           const RenderConfig& cfg, const PostRenderHook& hook) {
  DovRecord r;
  r.cloud_id = cloud.id;
  r.rig = grid.rig;
  r.face_index = grid.base.face_index;
  r.view = grid.base;
  r.default_viewpoint = grid.base.viewpoint;
  r.candidate_scores = score_candidates(scorer, cloud, grid, cfg, hook);
  int scored = 0;
  for (const auto& s : r.candidate_scores) scored += s.has_value();
  if (scored == 0) throw Error("every candidate projection of face " + std::to_string(r.face_index) + " is empty");
  r.optimized_index = candidate_at_rank(r.candidate_scores, scored);
  r.optimized_viewpoint = grid.positions[r.optimized_index];
  r.candidate_rank_of_optimized = competition_ranks(r.candidate_scores)[r.optimized_index];
  return r;
}

std::vector<DovInput> dov_inputs(const DistortionLadder& ladder) {
  std::vector<DovInput> inputs;
  const std::string& id = ladder.reference.id;
  inputs.push_back({ladder.reference, {}, variant_file_name(id, "ref", 0)});
  for (const LadderVariant& v : ladder.variants) {
    const std::string type = v.type.name();
    inputs.push_back({v.cloud, {type, v.level, ladder.levels, v.seed}, variant_file_name(id, type, v.level)});
  }
  return inputs;
}

std::vector<DovRecord> build_dov(const std::vector<DovInput>& inputs, const ImageScorer& scorer,
                                 const DovOptions& opts) {
  opts.render.validate();
  struct Task {
    std::size_t input;
    CandidateGrid grid;
  };
  std::vector<Task> tasks;
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const PointCloud& c = inputs[i].cloud;
    for (CandidateGrid& g : rig_grids(summarize(c), opts.render.margin, opts.candidates, opts.rigs,
                                      rig_seed_for(opts.seed, c.id))) {
      tasks.push_back({i, std::move(g)});
    }
  }
  std::vector<DovRecord> records(tasks.size());
  parallel_for(tasks.size(), opts.render.threads, [&](std::size_t t) {
    const DovInput& in = inputs[tasks[t].input];
    RenderConfig single = opts.render;
    single.threads = 1;
    DovRecord r = select_optimized(scorer, in.cloud, tasks[t].grid, single);
    r.distortion = in.distortion;
    r.cloud_file = in.cloud_file;
    records[t] = std::move(r);
  });
  std::stable_sort(records.begin(), records.end(), [](const DovRecord& a, const DovRecord& b) {
    return std::tuple(a.cloud_id, a.distortion.label(), a.rig, a.face_index) <
           std::tuple(b.cloud_id, b.distortion.label(), b.rig, b.face_index);
  });
  return records;
}

nlohmann::json to_json(const DovRecord& r) {
  nlohmann::json scores = nlohmann::json::array();
  for (const auto& s : r.candidate_scores) scores.push_back(s ? nlohmann::json(*s) : nlohmann::json());
  nlohmann::json distortion = "reference";
  if (!r.distortion.is_reference()) {
    distortion = {{"type", r.distortion.type},
                  {"level", r.distortion.level},
                  {"levels", r.distortion.levels},
                  {"seed", r.distortion.seed}};
  }
  return {{"cloud_id", r.cloud_id},
          {"distortion", distortion},
          {"cloud_file", r.cloud_file},
          {"rig", r.rig},
          {"face_index", r.face_index},
          {"default_viewpoint", vec_to_json(r.default_viewpoint)},
          {"optimized_viewpoint", vec_to_json(r.optimized_viewpoint)},
          {"candidate_scores", scores},
          {"optimized_index", r.optimized_index},
          {"candidate_rank_of_optimized", r.candidate_rank_of_optimized},
          {"view", view_to_json(r.view)}};
}

DovRecord dov_record_from_json(const nlohmann::json& j) {
  DovRecord r;
  r.cloud_id = j.at("cloud_id").get<std::string>();
  const auto& d = j.at("distortion");
  if (!d.is_string()) {
    r.distortion.type = d.at("type").get<std::string>();
    r.distortion.level = d.at("level").get<int>();
    r.distortion.levels = d.at("levels").get<int>();
    r.distortion.seed = d.at("seed").get<std::uint64_t>();
  } else if (d.get<std::string>() != "reference") {
    throw Error("unknown distortion tag '" + d.get<std::string>() + "'");
  }
  r.cloud_file = j.value("cloud_file", "");
  r.rig = j.value("rig", 0);
  r.face_index = j.at("face_index").get<int>();
  r.default_viewpoint = vec_from_json(j.at("default_viewpoint"));
  r.optimized_viewpoint = vec_from_json(j.at("optimized_viewpoint"));
  for (const auto& s : j.at("candidate_scores")) {
    r.candidate_scores.push_back(s.is_null() ? std::nullopt : std::optional<double>(s.get<double>()));
  }
  r.optimized_index = j.at("optimized_index").get<int>();
  r.candidate_rank_of_optimized = j.at("candidate_rank_of_optimized").get<int>();
  r.view = view_from_json(j.at("view"));
  return r;
}

void write_file_atomic(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  try {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    {
      std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
      if (!out) throw Error("cannot write " + tmp.string());
      out << text;
      out.flush();
      if (!out) throw Error("write failed: " + tmp.string());
    }
    std::filesystem::rename(tmp, path);
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove(tmp, ec);
    throw;
  }
}

void write_dov(const std::vector<DovRecord>& records, const std::filesystem::path& path) {
  std::string text;
  for (const DovRecord& r : records) text += to_json(r).dump() + "\n";
  write_file_atomic(path, text);
}

std::vector<DovRecord> read_dov(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<DovRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(dov_record_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(line_no, path.string() + ": " + e.what());
    }
  }
  return out;
}

}  // namespace pcqa
