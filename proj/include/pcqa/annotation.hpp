#pragma once

// Data side of the worst-viewpoint annotation study: candidate groups built
// from a DOV manifest, rater selections persisted as JSON lines in a session
// directory, and the consistency index against SSVRN's worst candidates.

#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "pcqa/cavgn.hpp"

namespace pcqa {

struct AnnotationGroup {
  std::string group_id;
  std::string cloud_id;
  std::string cloud_file;
  int rig = 0;
  int face_index = 0;
  int ssvrn_worst = 0;
  std::vector<ViewSetup> candidates;  ///< canonical grid order
};

/// `<cloud_id>.<distortion label>.r<rig>.f<face>`.
std::string group_id_for(const DovRecord& r);

/// `<group_id>.c<candidate>`.
std::string image_id_for(const std::string& group_id, int candidate);

struct Selection {
  std::string group_id;
  std::string rater_id;
  int worst_index = 0;
};

nlohmann::json to_json(const Selection& s);
Selection selection_from_json(const nlohmann::json& j);

/// Modal selection, lowest index on ties.
int consensus_index(const std::vector<int>& selections);

struct ConsistencySummary {
  std::optional<double> ci;  ///< nullopt without selections
  std::size_t n_groups = 0;
  std::map<std::string, double> per_rater;
  std::map<std::string, int> consensus;  ///< by group id
};

enum class SubmitStatus { Accepted, UnknownGroup, BadIndex, Duplicate };

/// Thread-safe. Pipeline artifacts are only read; writes go to
/// `<session_dir>/selections.jsonl`, which is replayed on construction.
class AnnotationService {
 public:
  AnnotationService(const std::vector<DovRecord>& records, CloudStore store, RenderConfig render,
                    std::filesystem::path session_dir);

  const std::vector<AnnotationGroup>& groups() const { return groups_; }
  nlohmann::json groups_json() const;

  /// PNG bytes of one candidate image, rendered on first use; nullopt for
  /// an unknown id.
  std::optional<std::string> image_png(const std::string& image_id);

  SubmitStatus submit(const Selection& s);
  std::vector<Selection> selections() const;
  ConsistencySummary consistency() const;
  nlohmann::json ci_json() const;

  std::filesystem::path session_file() const { return session_dir_ / "selections.jsonl"; }

 private:
  SubmitStatus validate(const Selection& s) const;

  std::vector<AnnotationGroup> groups_;
  std::map<std::string, std::size_t> group_index_;
  std::filesystem::path session_dir_;
  RenderConfig render_;

  mutable std::mutex selections_mutex_;
  std::vector<Selection> selections_;

  std::mutex images_mutex_;
  CloudStore store_;
  std::map<std::string, std::string> png_cache_;
};

}  // namespace pcqa
