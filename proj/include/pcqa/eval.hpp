#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "pcqa/cavgn.hpp"
#include "pcqa/distortion.hpp"
#include "pcqa/projector.hpp"
#include "pcqa/ssvrn.hpp"

namespace pcqa {

/// Pearson correlation on raw values. Throws Error "degenerate series" when
/// either side is constant, and Error on length mismatch, n < 3 or
/// non-finite values.
double plcc(std::span<const double> predicted, std::span<const double> target);

/// Pearson correlation of average ranks.
double srcc(std::span<const double> predicted, std::span<const double> target);

/// Kendall tau-b.
double krcc(std::span<const double> predicted, std::span<const double> target);

/// 1-based ranks in ascending order; tied values share their mean rank.
std::vector<double> average_ranks(std::span<const double> values);

struct BaselineConfig {
  RenderConfig render;
  int window = 8;
  double k1 = 0.01;
  double k2 = 0.03;
  double psnr_cap_db = 60.0;

  nlohmann::json echo() const;
};

/// Quality of one view pair, at most 1: the mean of a windowed luminance
/// structural similarity and a capped depth PSNR / cap. Pixels covered by
/// either raster count; a mask mismatch is a full-scale depth error.
/// nullopt when both rasters are empty.
std::optional<double> view_quality(const ProjectedImage& reference, const ProjectedImage& degraded,
                                   const BaselineConfig& cfg);

/// Mean view quality over `views`; views where both projections are empty
/// are skipped. Throws when every view is skipped.
double baseline_pcqa(const PointCloud& reference, const PointCloud& degraded, const std::vector<ViewSetup>& views,
                     const BaselineConfig& cfg);

struct EvalItem {
  std::string id;
  std::shared_ptr<const PointCloud> reference;
  std::shared_ptr<const PointCloud> degraded;
  double mos = 0.0;
};

/// Degraded variants of every ladder with their pseudo-MOS. Item ids are
/// the variant file stems.
std::vector<EvalItem> ladder_items(const std::vector<DistortionLadder>& ladders);

enum class ViewMode { Random, Default, Generated };
std::string mode_name(ViewMode mode);
ViewMode mode_from_name(const std::string& name);

struct EvalOptions {
  BaselineConfig baseline;
  std::string dataset = "synthetic";
  std::uint64_t seed = 0;
  int candidates = 9;
  unsigned threads = 1;
};

struct EvalReport {
  double plcc = 0.0;
  double srcc = 0.0;
  double krcc = 0.0;
  std::size_t n = 0;
  std::string mode;
  int rank = 0;  ///< quality rank for rank-sweep reports, 0 otherwise
  std::string metric = "baseline_pcqa";
  std::string dataset;
  nlohmann::json config;
  std::vector<double> predicted;
  std::vector<double> target;
};

/// The six viewpoints used for `item` under `mode`. Views are derived from
/// the degraded cloud; generated mode needs `cavgn`.
std::vector<ViewSetup> strategy_views(const EvalItem& item, ViewMode mode, const CavgnModel* cavgn,
                                      const EvalOptions& opts);

EvalReport compare_strategies(const std::vector<EvalItem>& items, ViewMode mode, const CavgnModel* cavgn,
                              const EvalOptions& opts);

/// One report per quality rank 1..N_v. Per face the N_v candidate images of
/// the degraded cloud are ranked by `scorer` (1 = best); the baseline uses
/// the candidate at the requested rank. Ranks beyond the number of
/// non-empty candidates fall back to the last one.
std::vector<EvalReport> rank_sweep(const std::vector<EvalItem>& items, const ImageScorer& scorer,
                                   const EvalOptions& opts);

EvalReport worse_the_better(const std::vector<EvalItem>& items, const ImageScorer& scorer, int rank,
                            const EvalOptions& opts);

/// Fraction of positions where the two index lists agree.
double consistency_index(std::span<const int> human, std::span<const int> ssvrn_worst);

nlohmann::json to_json(const EvalReport& r);
std::string report_table(const std::vector<EvalReport>& reports);

/// `cloud_id,score` lines; an optional header line is skipped.
std::map<std::string, double> parse_mos_csv(const std::string& text);
std::map<std::string, double> read_mos_csv(const std::filesystem::path& path);

}  // namespace pcqa
