#include "pcqa/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <sstream>

#include "pcqa/parallel.hpp"
#include "pcqa/seeding.hpp"

namespace pcqa {

namespace {

void check_series(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw Error("series lengths differ: " + std::to_string(x.size()) + " vs " + std::to_string(y.size()));
  }
  if (x.size() < 3) throw Error("correlation needs at least 3 values");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || !std::isfinite(y[i])) throw Error("non-finite value in series");
  }
}

double pearson(std::span<const double> x, std::span<const double> y) {
  // Sums of values shifted by the first sample.
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double a = x[i] - x[0], b = y[i] - y[0];
    sx += a;
    sy += b;
    sxx += a * a;
    syy += b * b;
    sxy += a * b;
  }
  const double cxx = n * sxx - sx * sx;
  const double cyy = n * syy - sy * sy;
  const double cxy = n * sxy - sx * sy;
  if (!(cxx > 0.0) || !(cyy > 0.0)) throw Error("degenerate series");
  return std::clamp(cxy / std::sqrt(cxx * cyy), -1.0, 1.0);
}

int sign(double v) { return (v > 0.0) - (v < 0.0); }

double luminance(const ProjectedImage& img, std::size_t i) {
  return 0.299 * img.color[3 * i] + 0.587 * img.color[3 * i + 1] + 0.114 * img.color[3 * i + 2];
}

/// Mean of the values in ascending order, so the result does not depend on
/// the order of the views.
double mean_of_views(std::vector<double> values) {
  if (values.empty()) throw Error("every view produced an empty projection");
  std::sort(values.begin(), values.end());
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

EvalReport make_report(std::vector<double> predicted, std::vector<double> target, const std::string& mode,
                       int rank, const EvalOptions& opts, nlohmann::json config) {
  EvalReport r;
  r.plcc = plcc(predicted, target);
  r.srcc = srcc(predicted, target);
  r.krcc = krcc(predicted, target);
  r.n = predicted.size();
  r.mode = mode;
  r.rank = rank;
  r.dataset = opts.dataset;
  config["baseline"] = opts.baseline.echo();
  r.config = std::move(config);
  r.predicted = std::move(predicted);
  r.target = std::move(target);
  return r;
}

std::vector<double> targets(const std::vector<EvalItem>& items) {
  std::vector<double> t;
  for (const EvalItem& item : items) t.push_back(item.mos);
  return t;
}

}  // namespace

double plcc(std::span<const double> predicted, std::span<const double> target) {
  check_series(predicted, target);
  return pearson(predicted, target);
}

std::vector<double> average_ranks(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && values[order[j]] == values[order[i]]) ++j;
    const double rank = static_cast<double>(i + 1 + j) / 2.0;
    for (std::size_t k = i; k < j; ++k) ranks[order[k]] = rank;
    i = j;
  }
  return ranks;
}

double srcc(std::span<const double> predicted, std::span<const double> target) {
  check_series(predicted, target);
  return pearson(average_ranks(predicted), average_ranks(target));
}

double krcc(std::span<const double> predicted, std::span<const double> target) {
  check_series(predicted, target);
  long long concordant = 0, discordant = 0, only_x = 0, only_y = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    for (std::size_t j = i + 1; j < predicted.size(); ++j) {
      const int dx = sign(predicted[i] - predicted[j]);
      const int dy = sign(target[i] - target[j]);
      if (dx == 0 && dy == 0) continue;
      if (dx == 0) {
        ++only_x;
      } else if (dy == 0) {
        ++only_y;
      } else if (dx == dy) {
        ++concordant;
      } else {
        ++discordant;
      }
    }
  }
  const long long untied_x = concordant + discordant + only_y;
  const long long untied_y = concordant + discordant + only_x;
  if (untied_x == 0 || untied_y == 0) throw Error("degenerate series");
  return std::clamp(static_cast<double>(concordant - discordant) /
                        std::sqrt(static_cast<double>(untied_x) * static_cast<double>(untied_y)),
                    -1.0, 1.0);
}

nlohmann::json BaselineConfig::echo() const {
  return {{"resolution", render.resolution},
          {"splat_radius", render.splat_radius},
          {"margin", render.margin},
          {"window", window},
          {"k1", k1},
          {"k2", k2},
          {"c1", std::pow(k1 * 255.0, 2)},
          {"c2", std::pow(k2 * 255.0, 2)},
          {"psnr_cap_db", psnr_cap_db},
          {"weights", {0.5, 0.5}}};
}

std::optional<double> view_quality(const ProjectedImage& reference, const ProjectedImage& degraded,
                                   const BaselineConfig& cfg) {
  if (reference.width != degraded.width || reference.height != degraded.height) {
    throw Error("view quality of rasters with different sizes");
  }
  if (cfg.window < 1) throw Error("window must be positive");
  const int w = reference.width, hgt = reference.height;
  auto covered = [&](std::size_t i) { return reference.mask[i] || degraded.mask[i]; };

  const double c1 = std::pow(cfg.k1 * 255.0, 2), c2 = std::pow(cfg.k2 * 255.0, 2);
  double ssim_sum = 0.0, weight = 0.0;
  std::vector<double> lx, ly;
  for (int by = 0; by < hgt; by += cfg.window) {
    for (int bx = 0; bx < w; bx += cfg.window) {
      lx.clear();
      ly.clear();
      int count = 0;
      for (int r = by; r < std::min(hgt, by + cfg.window); ++r) {
        for (int c = bx; c < std::min(w, bx + cfg.window); ++c) {
          const std::size_t i = reference.index(r, c);
          lx.push_back(luminance(reference, i));
          ly.push_back(luminance(degraded, i));
          count += covered(i);
        }
      }
      if (count == 0) continue;
      const double m = static_cast<double>(lx.size());
      const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / m;
      const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / m;
      double vx = 0, vy = 0, cxy = 0;
      for (std::size_t k = 0; k < lx.size(); ++k) {
        vx += (lx[k] - mx) * (lx[k] - mx);
        vy += (ly[k] - my) * (ly[k] - my);
        cxy += (lx[k] - mx) * (ly[k] - my);
      }
      vx /= m;
      vy /= m;
      cxy /= m;
      const double s = ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ssim_sum += count * s;
      weight += count;
    }
  }
  if (weight == 0.0) return std::nullopt;

  const double range = 2.0 * reference.view.region_half_extent;
  double sq = 0.0;
  for (std::size_t i = 0; i < reference.pixel_count(); ++i) {
    if (!covered(i)) continue;
    double e = 1.0;
    if (reference.mask[i] && degraded.mask[i]) e = std::min(1.0, std::abs(reference.depth[i] - degraded.depth[i]) / range);
    sq += e * e;
  }
  const double mse = sq / weight;
  const double psnr = mse == 0.0 ? cfg.psnr_cap_db : std::min(cfg.psnr_cap_db, -10.0 * std::log10(mse));
  return 0.5 * (ssim_sum / weight) + 0.5 * psnr / cfg.psnr_cap_db;
}

double baseline_pcqa(const PointCloud& reference, const PointCloud& degraded, const std::vector<ViewSetup>& views,
                     const BaselineConfig& cfg) {
  if (reference.empty() || degraded.empty()) throw Error("baseline needs two nonempty clouds");
  std::vector<double> values;
  for (const ViewSetup& view : views) {
    const auto q = view_quality(render(reference, view, cfg.render), render(degraded, view, cfg.render), cfg);
    if (q) values.push_back(*q);
  }
  return mean_of_views(std::move(values));
}

std::vector<EvalItem> ladder_items(const std::vector<DistortionLadder>& ladders) {
  std::vector<EvalItem> items;
  for (const DistortionLadder& ladder : ladders) {
    auto ref = std::make_shared<const PointCloud>(ladder.reference);
    for (const LadderVariant& v : ladder.variants) {
      std::string id = variant_file_name(ladder.reference.id, v.type.name(), v.level);
      id.resize(id.size() - 4);
      items.push_back({id, ref, std::make_shared<const PointCloud>(v.cloud), pseudo_mos(v.level, ladder.levels)});
    }
  }
  return items;
}

std::string mode_name(ViewMode mode) {
  switch (mode) {
    case ViewMode::Random:
      return "random";
    case ViewMode::Default:
      return "default";
    case ViewMode::Generated:
      return "generated";
  }
  return "default";
}

ViewMode mode_from_name(const std::string& name) {
  if (name == "random") return ViewMode::Random;
  if (name == "default") return ViewMode::Default;
  if (name == "generated") return ViewMode::Generated;
  throw Error("unknown viewpoint mode '" + name + "'");
}

std::vector<ViewSetup> strategy_views(const EvalItem& item, ViewMode mode, const CavgnModel* cavgn,
                                      const EvalOptions& opts) {
  const std::vector<ViewSetup> base = default_viewpoints(summarize(*item.degraded), opts.baseline.render.margin);
  switch (mode) {
    case ViewMode::Default:
      return base;
    case ViewMode::Random: {
      const std::uint64_t seed = hash_combine(derive_seed(opts.seed, "eval.random"), hash_name(item.id));
      std::vector<ViewSetup> views;
      for (const ViewSetup& b : base) views.push_back(random_region_view(b, hash_combine(seed, b.face_index)));
      return views;
    }
    case ViewMode::Generated: {
      if (!cavgn) throw Error("generated viewpoints need a trained CAVGN model");
      const CloudFeatures feats = compute_cloud_features(*item.degraded, cavgn->hp.tokens);
      std::vector<ViewSetup> views;
      for (const ViewSetup& b : base) views.push_back(view_toward_center(b, predict_viewpoint(*cavgn, feats, b)));
      return views;
    }
  }
  return base;
}

EvalReport compare_strategies(const std::vector<EvalItem>& items, ViewMode mode, const CavgnModel* cavgn,
                              const EvalOptions& opts) {
  if (mode == ViewMode::Generated && !cavgn) throw Error("generated viewpoints need a trained CAVGN model");
  std::vector<double> predicted(items.size());
  parallel_for(items.size(), opts.threads, [&](std::size_t i) {
    const EvalItem& item = items[i];
    predicted[i] = baseline_pcqa(*item.reference, *item.degraded, strategy_views(item, mode, cavgn, opts),
                                 opts.baseline);
  });
  nlohmann::json config = {{"strategy", mode_name(mode)}};
  if (mode == ViewMode::Random) config["seed"] = opts.seed;
  if (mode == ViewMode::Generated) config["tokens"] = cavgn->hp.tokens;
  return make_report(std::move(predicted), targets(items), mode_name(mode), 0, opts, std::move(config));
}

std::vector<EvalReport> rank_sweep(const std::vector<EvalItem>& items, const ImageScorer& scorer,
                                   const EvalOptions& opts) {
  const int n = opts.candidates;
  // quality[item][rank - 1]
  std::vector<std::vector<double>> quality(items.size(), std::vector<double>(n));
  parallel_for(items.size(), opts.threads, [&](std::size_t i) {
    const EvalItem& item = items[i];
    const auto base = default_viewpoints(summarize(*item.degraded), opts.baseline.render.margin);
    std::vector<std::vector<double>> per_rank(n);
    for (const ViewSetup& b : base) {
      const CandidateGrid grid = sample_candidates(b, n);
      std::vector<std::optional<double>> scores(n), q(n);
      int scored = 0;
      for (int j = 0; j < n; ++j) {
        const ProjectedImage deg = render(*item.degraded, grid.views[j], opts.baseline.render);
        if (deg.covered() > 0) {
          scores[j] = scorer(deg);
          ++scored;
        }
        q[j] = view_quality(render(*item.reference, grid.views[j], opts.baseline.render), deg, opts.baseline);
      }
      for (int r = 1; r <= n; ++r) {
        const auto& chosen = q[candidate_at_rank(scores, std::min(r, scored))];
        if (chosen) per_rank[r - 1].push_back(*chosen);
      }
    }
    for (int r = 0; r < n; ++r) quality[i][r] = mean_of_views(std::move(per_rank[r]));
  });
  std::vector<EvalReport> reports;
  for (int r = 1; r <= n; ++r) {
    std::vector<double> predicted;
    for (const auto& q : quality) predicted.push_back(q[r - 1]);
    reports.push_back(make_report(std::move(predicted), targets(items), "rank-sweep", r, opts,
                                  {{"strategy", "rank-sweep"}, {"candidates", n}}));
  }
  return reports;
}

EvalReport worse_the_better(const std::vector<EvalItem>& items, const ImageScorer& scorer, int rank,
                            const EvalOptions& opts) {
  if (rank < 1 || rank > opts.candidates) {
    throw Error("quality rank " + std::to_string(rank) + " outside 1.." + std::to_string(opts.candidates));
  }
  return rank_sweep(items, scorer, opts)[rank - 1];
}

double consistency_index(std::span<const int> human, std::span<const int> ssvrn_worst) {
  if (human.size() != ssvrn_worst.size()) {
    throw Error("consistency index of lists with lengths " + std::to_string(human.size()) + " and " +
                std::to_string(ssvrn_worst.size()));
  }
  if (human.empty()) throw Error("consistency index of empty lists");
  std::size_t matches = 0;
  for (std::size_t i = 0; i < human.size(); ++i) matches += human[i] == ssvrn_worst[i];
  return static_cast<double>(matches) / static_cast<double>(human.size());
}

nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j = {{"plcc", r.plcc},         {"srcc", r.srcc},     {"krcc", r.krcc},
                      {"n", r.n},               {"mode", r.mode},     {"metric", r.metric},
                      {"dataset", r.dataset},   {"config", r.config}, {"predicted", r.predicted},
                      {"target", r.target}};
  if (r.rank > 0) j["rank"] = r.rank;
  return j;
}

std::string report_table(const std::vector<EvalReport>& reports) {
  std::ostringstream out;
  char line[160];
  std::snprintf(line, sizeof line, "%-12s %-12s %4s %5s %8s %8s %8s\n", "dataset", "mode", "rank", "n", "PLCC",
                "SRCC", "KRCC");
  out << line;
  for (const EvalReport& r : reports) {
    const std::string rank = r.rank > 0 ? std::to_string(r.rank) : "-";
    std::snprintf(line, sizeof line, "%-12s %-12s %4s %5zu %8.4f %8.4f %8.4f\n", r.dataset.c_str(), r.mode.c_str(),
                  rank.c_str(), r.n, r.plcc, r.srcc, r.krcc);
    out << line;
  }
  return out.str();
}

std::map<std::string, double> parse_mos_csv(const std::string& text) {
  std::map<std::string, double> mos;
  std::istringstream in(text);
  std::string raw;
  for (std::size_t line = 1; std::getline(in, raw); ++line) {
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (raw.find_first_not_of(" \t") == std::string::npos) continue;
    const auto comma = raw.find(',');
    if (comma == std::string::npos) throw ParseError(line, "expected cloud_id,score");
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t"), e = s.find_last_not_of(" \t");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string id = trim(raw.substr(0, comma));
    const std::string value = trim(raw.substr(comma + 1));
    double score = 0.0;
    const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), score);
    if (ec != std::errc() || end != value.data() + value.size() || !std::isfinite(score)) {
      if (mos.empty() && line == 1) continue;
      throw ParseError(line, "bad score '" + value + "'");
    }
    if (id.empty()) throw ParseError(line, "empty cloud id");
    if (!mos.emplace(id, score).second) throw ParseError(line, "duplicate cloud id '" + id + "'");
  }
  if (mos.empty()) throw Error("MOS file has no entries");
  return mos;
}

std::map<std::string, double> read_mos_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  return parse_mos_csv(s.str());
}

}  // namespace pcqa
