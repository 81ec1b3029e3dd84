#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pcqa/cavgn.hpp"
#include "pcqa/projector.hpp"
#include "pcqa/ssvrn.hpp"

namespace pcqa::cli {

/// `key = value` lines; `#` starts a comment. Later keys override earlier.
std::map<std::string, std::string> parse_config_text(const std::string& text);

struct RunConfig {
  std::filesystem::path clouds_dir;
  std::filesystem::path work_dir = "work";
  RenderConfig render;
  int candidates = 9;
  std::vector<std::string> distortions{"CN", "GGN", "DS", "OT"};
  int levels = 4;
  int rigs_per_cloud = 3;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::string dataset = "synthetic";
  ScoreHyperparams ssvrn;
  CavgnHyperparams cavgn;

  bool dry_run = false;                    ///< `pairs` counts without rendering
  std::optional<int> dataset_clouds;       ///< cloud count for a dry run
  std::optional<int> distortion_groups;    ///< type count for a dry run

  /// Applies known keys; throws Error naming an unknown key or a bad value.
  void apply(const std::map<std::string, std::string>& values);

  /// Reads a config file; relative paths in it resolve against its folder.
  void load_file(const std::filesystem::path& path);

  /// Throws unless the grid size is 9, 25 or 49 and the levels, rigs and
  /// hyperparameters are in range.
  void validate() const;
  void require_clouds_dir() const;

  std::filesystem::path work(const std::string& name) const { return work_dir / name; }
  nlohmann::json echo() const;
};

}  // namespace pcqa::cli
