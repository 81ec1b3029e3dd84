#include "pcqa/annotation.hpp"

#include <fstream>

#include "pcqa/eval.hpp"

namespace pcqa {

std::string group_id_for(const DovRecord& r) {
  return r.cloud_id + "." + r.distortion.label() + ".r" + std::to_string(r.rig) + ".f" +
         std::to_string(r.face_index);
}

std::string image_id_for(const std::string& group_id, int candidate) {
  return group_id + ".c" + std::to_string(candidate);
}

nlohmann::json to_json(const Selection& s) {
  return {{"group_id", s.group_id}, {"rater_id", s.rater_id}, {"worst_index", s.worst_index}};
}

Selection selection_from_json(const nlohmann::json& j) {
  Selection s;
  s.group_id = j.at("group_id").get<std::string>();
  s.rater_id = j.at("rater_id").get<std::string>();
  s.worst_index = j.at("worst_index").get<int>();
  if (s.rater_id.empty()) throw Error("empty rater id");
  return s;
}

int consensus_index(const std::vector<int>& selections) {
  if (selections.empty()) throw Error("consensus of no selections");
  std::map<int, int> votes;
  for (int s : selections) ++votes[s];
  int best = votes.begin()->first, most = 0;
  for (const auto& [index, n] : votes) {
    if (n > most) {
      best = index;
      most = n;
    }
  }
  return best;
}

AnnotationService::AnnotationService(const std::vector<DovRecord>& records, CloudStore store, RenderConfig render,
                                     std::filesystem::path session_dir)
    : session_dir_(std::move(session_dir)), render_(render), store_(std::move(store)) {
  for (const DovRecord& r : records) {
    AnnotationGroup g;
    g.group_id = group_id_for(r);
    g.cloud_id = r.cloud_id;
    g.cloud_file = r.cloud_file;
    g.rig = r.rig;
    g.face_index = r.face_index;
    g.ssvrn_worst = r.optimized_index;
    g.candidates = sample_candidates(r.view, static_cast<int>(r.candidate_scores.size())).views;
    if (!group_index_.emplace(g.group_id, groups_.size()).second) throw Error("duplicate group " + g.group_id);
    groups_.push_back(std::move(g));
  }
  std::filesystem::create_directories(session_dir_);
  std::ifstream in(session_file());
  std::string line;
  for (std::size_t line_no = 1; std::getline(in, line); ++line_no) {
    if (line.empty()) continue;
    Selection s;
    try {
      s = selection_from_json(nlohmann::json::parse(line));
    } catch (const std::exception& e) {
      throw ParseError(line_no, session_file().string() + ": " + e.what());
    }
    if (validate(s) != SubmitStatus::Accepted) {
      throw ParseError(line_no, session_file().string() + ": selection does not match the manifest");
    }
    selections_.push_back(std::move(s));
  }
}

nlohmann::json AnnotationService::groups_json() const {
  nlohmann::json out = nlohmann::json::array();
  for (const AnnotationGroup& g : groups_) {
    nlohmann::json urls = nlohmann::json::array();
    for (std::size_t j = 0; j < g.candidates.size(); ++j) {
      urls.push_back("/image/" + image_id_for(g.group_id, static_cast<int>(j)));
    }
    out.push_back({{"group_id", g.group_id},
                   {"cloud_id", g.cloud_id},
                   {"face_index", g.face_index},
                   {"rig", g.rig},
                   {"image_urls", urls}});
  }
  return out;
}

std::optional<std::string> AnnotationService::image_png(const std::string& image_id) {
  const auto dot = image_id.rfind(".c");
  if (dot == std::string::npos) return std::nullopt;
  const auto it = group_index_.find(image_id.substr(0, dot));
  if (it == group_index_.end()) return std::nullopt;
  const std::string digits = image_id.substr(dot + 2);
  if (digits.empty() || digits.size() > 4 || digits.find_first_not_of("0123456789") != std::string::npos) {
    return std::nullopt;
  }
  const AnnotationGroup& g = groups_[it->second];
  const int j = std::stoi(digits);
  if (j >= static_cast<int>(g.candidates.size())) return std::nullopt;

  std::lock_guard lock(images_mutex_);
  if (auto cached = png_cache_.find(image_id); cached != png_cache_.end()) return cached->second;
  std::string png = encode_png(render(store_.get(g.cloud_file), g.candidates[j], render_));
  png_cache_.emplace(image_id, png);
  return png;
}

SubmitStatus AnnotationService::validate(const Selection& s) const {
  const auto it = group_index_.find(s.group_id);
  if (it == group_index_.end()) return SubmitStatus::UnknownGroup;
  if (s.worst_index < 0 || s.worst_index >= static_cast<int>(groups_[it->second].candidates.size())) {
    return SubmitStatus::BadIndex;
  }
  return SubmitStatus::Accepted;
}

SubmitStatus AnnotationService::submit(const Selection& s) {
  if (const SubmitStatus v = validate(s); v != SubmitStatus::Accepted) return v;
  std::lock_guard lock(selections_mutex_);
  for (const Selection& prev : selections_) {
    if (prev.group_id == s.group_id && prev.rater_id == s.rater_id) return SubmitStatus::Duplicate;
  }
  std::ofstream out(session_file(), std::ios::app);
  out << to_json(s).dump() << '\n';
  out.flush();
  if (!out) throw Error("cannot append to " + session_file().string());
  selections_.push_back(s);
  return SubmitStatus::Accepted;
}

std::vector<Selection> AnnotationService::selections() const {
  std::lock_guard lock(selections_mutex_);
  return selections_;
}

ConsistencySummary AnnotationService::consistency() const {
  const std::vector<Selection> all = selections();
  ConsistencySummary out;
  std::map<std::string, std::vector<int>> by_group;
  std::map<std::string, std::pair<std::vector<int>, std::vector<int>>> by_rater;
  for (const Selection& s : all) {
    by_group[s.group_id].push_back(s.worst_index);
    auto& [human, worst] = by_rater[s.rater_id];
    human.push_back(s.worst_index);
    worst.push_back(groups_[group_index_.at(s.group_id)].ssvrn_worst);
  }
  std::vector<int> human, worst;
  for (const AnnotationGroup& g : groups_) {
    const auto it = by_group.find(g.group_id);
    if (it == by_group.end()) continue;
    const int c = consensus_index(it->second);
    out.consensus[g.group_id] = c;
    human.push_back(c);
    worst.push_back(g.ssvrn_worst);
  }
  out.n_groups = human.size();
  if (!human.empty()) out.ci = consistency_index(human, worst);
  for (const auto& [rater, lists] : by_rater) out.per_rater[rater] = consistency_index(lists.first, lists.second);
  return out;
}

nlohmann::json AnnotationService::ci_json() const {
  const ConsistencySummary s = consistency();
  nlohmann::json j = {{"ci", nullptr}, {"n_groups", s.n_groups}, {"per_rater", s.per_rater},
                      {"consensus", s.consensus}};
  if (s.ci) j["ci"] = *s.ci;
  return j;
}

}  // namespace pcqa
