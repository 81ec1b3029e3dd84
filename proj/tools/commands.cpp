#include <algorithm>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "cli.hpp"
#include "http_api.hpp"
#include "pcqa/annotation.hpp"
#include "pcqa/dov.hpp"
#include "pcqa/eval.hpp"
#include "pcqa/pairs.hpp"
#include "pcqa/seeding.hpp"
#include "pcqa/synthetic.hpp"

namespace pcqa::cli {

namespace fs = std::filesystem;

std::vector<PointCloud> load_reference_clouds(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".ply") files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error("no .ply files in " + dir.string());
  std::vector<PointCloud> clouds;
  for (const fs::path& f : files) clouds.push_back(load_ply(f));
  return clouds;
}

std::vector<DistortionLadder> make_ladders(const RunConfig& cfg) {
  cfg.require_clouds_dir();
  std::vector<DistortionType> types;
  for (const std::string& name : cfg.distortions) types.push_back(DistortionType::parse(name));
  std::vector<DistortionLadder> ladders;
  for (const PointCloud& cloud : load_reference_clouds(cfg.clouds_dir)) {
    const std::uint64_t seed = hash_combine(derive_seed(cfg.seed, "distort"), hash_name(cloud.id));
    ladders.push_back(build_ladder(cloud, types, cfg.levels, seed, cfg.threads));
  }
  return ladders;
}

CloudStore ladder_store(const std::vector<DistortionLadder>& ladders) {
  CloudStore store;
  for (const DistortionLadder& ladder : ladders) {
    for (DovInput& in : dov_inputs(ladder)) store.add(in.cloud_file, std::move(in.cloud));
  }
  return store;
}

namespace {

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(path.string() + ": " + e.what());
  }
}

void write_output(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  write_file_atomic(path, text);
}

void write_json(const fs::path& path, const nlohmann::json& j) { write_output(path, j.dump(2) + "\n"); }

fs::path or_default(const std::string& given, const fs::path& fallback) {
  return given.empty() ? fallback : fs::path(given);
}

int distort(const RunConfig& cfg, const fs::path& out_dir, std::ostream& out) {
  std::string mos;
  std::size_t files = 0;
  const auto ladders = make_ladders(cfg);
  for (const DistortionLadder& ladder : ladders) {
    save_ladder(ladder, out_dir);
    files += 1 + ladder.variants.size();
  }
  for (const EvalItem& item : ladder_items(ladders)) {
    std::ostringstream line;
    line.precision(17);
    line << item.id << ',' << item.mos << '\n';
    mos += line.str();
  }
  write_output(out_dir / "mos.csv", "cloud_id,score\n" + mos);
  out << "clouds: " << ladders.size() << "\nfiles: " << files << "\nout: " << out_dir.string() << '\n';
  return 0;
}

int render_cmd(const RunConfig& cfg, const fs::path& cloud_path, int face, int grid, const fs::path& out_dir,
               std::ostream& out) {
  if (face < 0 || face >= kFaceCount) throw Error("face must be in 0..5");
  const PointCloud cloud = load_ply(cloud_path);
  const ViewSetup base = default_viewpoints(summarize(cloud), cfg.render.margin)[face];
  std::vector<std::pair<std::string, ViewSetup>> views;
  const std::string stem = cloud.id + "_f" + std::to_string(face);
  if (grid > 0) {
    const CandidateGrid g = sample_candidates(base, grid);
    for (int j = 0; j < grid; ++j) views.emplace_back(stem + "_c" + std::to_string(j), g.views[j]);
  } else {
    views.emplace_back(stem, base);
  }
  fs::create_directories(out_dir);
  for (const auto& [name, view] : views) {
    const ProjectedImage img = render(cloud, view, cfg.render);
    write_png(out_dir / (name + ".png"), img);
    write_depth(out_dir / (name + ".depth"), img);
    out << (out_dir / (name + ".png")).string() << ' ' << img.covered() << " px\n";
  }
  return 0;
}

int pairs_cmd(const RunConfig& cfg, const fs::path& manifest, std::ostream& out) {
  const std::uint64_t viewpoints = static_cast<std::uint64_t>(kFaceCount) * cfg.candidates * cfg.rigs_per_cloud;
  const std::uint64_t types = cfg.distortion_groups ? *cfg.distortion_groups : cfg.distortions.size();
  if (cfg.dry_run) {
    std::uint64_t clouds = 0;
    if (cfg.dataset_clouds) {
      clouds = *cfg.dataset_clouds;
    } else {
      cfg.require_clouds_dir();
      for (const auto& e : fs::directory_iterator(cfg.clouds_dir)) clouds += e.path().extension() == ".ply";
    }
    out << "pairs: " << PairShape{clouds, viewpoints, types, static_cast<std::uint64_t>(cfg.levels)}.total() << '\n';
    return 0;
  }
  if (cfg.distortion_groups) throw Error("distortion_groups applies to dry runs only");
  std::vector<RankPair> all;
  PairGenerationStats total;
  FeatureCache cache;
  for (const DistortionLadder& ladder : make_ladders(cfg)) {
    const auto grids = rig_grids(summarize(ladder.reference), cfg.render.margin, cfg.candidates, cfg.rigs_per_cloud,
                                 rig_seed_for(cfg.seed, ladder.reference.id));
    PairGenerationStats stats;
    auto pairs = generate_pairs(ladder, grids, cfg.render, cfg.seed, &cache, &stats);
    std::move(pairs.begin(), pairs.end(), std::back_inserter(all));
    total.enumerated += stats.enumerated;
    total.skipped_empty += stats.skipped_empty;
    total.images_rendered += stats.images_rendered;
  }
  write_pairs(all, manifest);
  out << "pairs: " << total.enumerated << "\nskipped_empty: " << total.skipped_empty
      << "\nwritten: " << all.size() << "\nimages_rendered: " << total.images_rendered
      << "\nmanifest: " << manifest.string() << '\n';
  return 0;
}

int train_ssvrn_cmd(const RunConfig& cfg, const fs::path& pairs_path, const fs::path& model_path,
                    std::ostream& out) {
  const std::vector<RankPair> pairs = read_pairs(pairs_path);
  const ScoreTraining t = train_ssvrn(pairs, cfg.ssvrn, derive_seed(cfg.seed, "ssvrn"));
  for (const EpochStats& e : t.history) {
    out << "epoch " << e.epoch << " lr " << e.learning_rate << " loss " << e.train_loss << " val_loss " << e.val_loss
        << " val_accuracy " << e.val_accuracy << '\n';
  }
  write_json(model_path, to_json(t.model));
  out << "pairs: " << pairs.size() << " (train " << t.train_indices.size() << ", val " << t.val_indices.size()
      << ")\nval_accuracy: " << t.history.back().val_accuracy << "\nmodel: " << model_path.string() << '\n';
  return 0;
}

int build_dov_cmd(const RunConfig& cfg, const fs::path& model_path, const fs::path& dov_path, std::ostream& out) {
  const ScoreModel model = score_model_from_json(read_json(model_path));
  std::vector<DovInput> inputs;
  for (const DistortionLadder& ladder : make_ladders(cfg)) {
    auto in = dov_inputs(ladder);
    std::move(in.begin(), in.end(), std::back_inserter(inputs));
  }
  DovOptions opts;
  opts.candidates = cfg.candidates;
  opts.rigs = cfg.rigs_per_cloud;
  opts.seed = cfg.seed;
  opts.render = cfg.render;
  const std::vector<DovRecord> records = build_dov(inputs, ssvrn_scorer(model), opts);
  const int center = (cfg.candidates - 1) / 2;
  std::size_t violations = 0;
  for (const DovRecord& r : records) {
    const auto& s = r.candidate_scores;
    if (s[center] && *s[r.optimized_index] > *s[center]) ++violations;
  }
  write_dov(records, dov_path);
  out << "records: " << records.size() << "\noptimized_worse_than_default: " << violations
      << "\ndov: " << dov_path.string() << '\n';
  return violations == 0 ? 0 : 1;
}

int train_cavgn_cmd(const RunConfig& cfg, const fs::path& dov_path, const fs::path& model_path, std::ostream& out) {
  const std::vector<DovRecord> records = read_dov(dov_path);
  CloudStore store = ladder_store(make_ladders(cfg));
  const auto features = record_features(records, store, cfg.cavgn.tokens, cfg.threads);
  const auto samples = make_samples(records, features);
  const CavgnTraining t = train_cavgn(samples, cfg.cavgn, derive_seed(cfg.seed, "cavgn"));
  out << "untrained_val_loss: " << t.untrained_val_loss << '\n';
  for (const CavgnEpochStats& e : t.history) {
    out << "epoch " << e.epoch << " lr " << e.learning_rate << " loss " << e.train_loss << " val_loss " << e.val_loss
        << '\n';
  }
  write_json(model_path, to_json(t.model));
  out << "samples: " << samples.size() << " (train " << t.train_indices.size() << ", val " << t.val_indices.size()
      << ")\nmodel: " << model_path.string() << '\n';
  return 0;
}

int evaluate_cmd(const RunConfig& cfg, const std::string& mode, const fs::path& report_path,
                 const fs::path& ssvrn_path, const fs::path& cavgn_path, const std::string& mos_path,
                 std::ostream& out) {
  std::vector<EvalItem> items = ladder_items(make_ladders(cfg));
  if (!mos_path.empty()) {
    const auto mos = read_mos_csv(mos_path);
    for (EvalItem& item : items) {
      const auto it = mos.find(item.id);
      if (it == mos.end()) throw Error("no MOS for " + item.id + " in " + mos_path);
      item.mos = it->second;
    }
  }
  EvalOptions opts;
  opts.baseline.render = cfg.render;
  opts.dataset = cfg.dataset;
  opts.seed = derive_seed(cfg.seed, "evaluate");
  opts.candidates = cfg.candidates;
  opts.threads = cfg.threads;
  std::vector<EvalReport> reports;
  if (mode == "rank-sweep") {
    const ScoreModel model = score_model_from_json(read_json(ssvrn_path));
    reports = rank_sweep(items, ssvrn_scorer(model), opts);
  } else {
    const ViewMode m = mode_from_name(mode);
    std::optional<CavgnModel> cavgn;
    if (m == ViewMode::Generated) cavgn = cavgn_model_from_json(read_json(cavgn_path));
    reports.push_back(compare_strategies(items, m, cavgn ? &*cavgn : nullptr, opts));
  }
  nlohmann::json j = nlohmann::json::array();
  for (const EvalReport& r : reports) j.push_back(to_json(r));
  write_json(report_path, reports.size() == 1 ? j[0] : nlohmann::json{{"reports", j}});
  out << report_table(reports) << "report: " << report_path.string() << '\n';
  return 0;
}

int serve_cmd(const RunConfig& cfg, const std::string& host, int port, const fs::path& session,
              const fs::path& dov_path, std::ostream& out) {
  AnnotationService service(read_dov(dov_path), ladder_store(make_ladders(cfg)), cfg.render, session);
  httplib::Server server;
  mount_annotation_routes(server, service);
  out << "groups: " << service.groups().size() << "\nlistening on http://" << host << ':' << port << std::endl;
  if (!server.listen(host, port)) throw Error("cannot listen on " + host + ":" + std::to_string(port));
  return 0;
}

int synth_cmd(const RunConfig& cfg, const fs::path& out_dir, int count, std::size_t points, std::ostream& out) {
  if (count < 1) throw Error("count must be at least 1");
  fs::create_directories(out_dir);
  for (int i = 0; i < count; ++i) {
    PointCloud c = make_synthetic_cloud(i, points, hash_combine(derive_seed(cfg.seed, "synth"), i));
    char name[32];
    std::snprintf(name, sizeof name, "synth_%02d", i);
    c.id = name;
    save_ply(out_dir / (c.id + ".ply"), c);
  }
  out << "clouds: " << count << "\nout: " << out_dir.string() << '\n';
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Content-aware viewpoint toolkit for projection-based point cloud quality assessment", "pcqa"};
  app.require_subcommand(1);

  std::string config_file, work_dir, clouds_dir;
  std::vector<std::string> sets;
  std::uint64_t seed = 0;
  unsigned threads = 1;
  std::vector<std::pair<CLI::App*, std::vector<CLI::Option*>>> commons;
  auto common = [&](CLI::App* sub) {
    std::vector<CLI::Option*> opts;
    sub->add_option("--config", config_file, "Flat key = value config file");
    sub->add_option("--set", sets, "Override one config key (key=value), repeatable");
    opts.push_back(sub->add_option("--seed", seed, "Root seed"));
    opts.push_back(sub->add_option("--threads", threads, "Worker threads"));
    opts.push_back(sub->add_option("--work-dir", work_dir, "Directory for pipeline artifacts"));
    opts.push_back(sub->add_option("--clouds-dir", clouds_dir, "Directory of reference .ply clouds"));
    commons.emplace_back(sub, opts);
    return sub;
  };

  std::string in_dir, out_path, cloud, model, dov, pairs, mode, cavgn, mos, session, host = "127.0.0.1";
  int face = 0, grid = 0, port = 8080, count = 8;
  std::size_t points = 4000;

  auto* c_distort = common(app.add_subcommand("distort", "Build distortion ladders for every PLY"));
  c_distort->add_option("--in", in_dir, "Input directory of reference clouds");
  c_distort->add_option("--out", out_path, "Output directory")->required();

  auto* c_render = common(app.add_subcommand("render", "Render PNG and depth dumps of one face"));
  c_render->add_option("--cloud", cloud, "PLY file")->required();
  c_render->add_option("--face", face, "Face index 0..5")->required();
  c_render->add_option("--grid", grid, "Render the N candidate views instead of the default view");
  c_render->add_option("--out", out_path, "Output directory");

  auto* c_pairs = common(app.add_subcommand("pairs", "Generate the rank-pair manifest"));
  c_pairs->add_option("--out", out_path, "Manifest path");

  auto* c_train = common(app.add_subcommand("train-ssvrn", "Train the viewpoint ranking network"));
  c_train->add_option("--pairs", pairs, "Pair manifest");
  c_train->add_option("--out", out_path, "Model path");

  auto* c_dov = common(app.add_subcommand("build-dov", "Build the default/optimized viewpoint dataset"));
  c_dov->add_option("--model", model, "SSVRN model");
  c_dov->add_option("--out", out_path, "DOV manifest path");

  auto* c_cavgn = common(app.add_subcommand("train-cavgn", "Train the viewpoint generation network"));
  c_cavgn->add_option("--dov", dov, "DOV manifest");
  c_cavgn->add_option("--out", out_path, "Model path");

  auto* c_eval = common(app.add_subcommand("evaluate", "Correlate baseline quality with MOS"));
  c_eval->add_option("--mode", mode, "random, default, generated or rank-sweep")
      ->required()
      ->check(CLI::IsMember({"random", "default", "generated", "rank-sweep"}));
  c_eval->add_option("--out", out_path, "Report path");
  c_eval->add_option("--model", model, "SSVRN model (rank-sweep)");
  c_eval->add_option("--cavgn", cavgn, "CAVGN model (generated)");
  c_eval->add_option("--mos", mos, "CSV of cloud_id,score replacing the pseudo-MOS");

  auto* c_serve = common(app.add_subcommand("serve", "HTTP endpoints for the annotation study"));
  c_serve->add_option("--port", port, "Port");
  c_serve->add_option("--host", host, "Bind address");
  c_serve->add_option("--session", session, "Session directory");
  c_serve->add_option("--dov", dov, "DOV manifest");

  auto* c_synth = common(app.add_subcommand("synth", "Write procedural reference clouds"));
  c_synth->add_option("--out", out_path, "Output directory")->required();
  c_synth->add_option("--count", count, "Number of clouds");
  c_synth->add_option("--points", points, "Points per cloud");

  std::vector<const char*> argv{"pcqa"};
  for (const std::string& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }

  try {
    RunConfig cfg;
    cfg.threads = std::max(1u, std::thread::hardware_concurrency());
    if (!config_file.empty()) cfg.load_file(config_file);
    std::map<std::string, std::string> overrides;
    for (const std::string& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw Error("--set expects key=value, got '" + s + "'");
      overrides[s.substr(0, eq)] = s.substr(eq + 1);
    }
    cfg.apply(overrides);
    for (const auto& [sub, opts] : commons) {
      if (!sub->parsed()) continue;
      if (opts[0]->count()) cfg.seed = seed;
      if (opts[1]->count()) cfg.threads = threads;
      if (opts[2]->count()) cfg.work_dir = work_dir;
      if (opts[3]->count()) cfg.clouds_dir = clouds_dir;
    }
    cfg.render.threads = cfg.threads;
    cfg.validate();

    if (c_distort->parsed()) {
      if (!in_dir.empty()) cfg.clouds_dir = in_dir;
      return distort(cfg, out_path, out);
    }
    if (c_render->parsed()) return render_cmd(cfg, cloud, face, grid, or_default(out_path, cfg.work("render")), out);
    if (c_pairs->parsed()) return pairs_cmd(cfg, or_default(out_path, cfg.work("pairs.jsonl")), out);
    if (c_train->parsed()) {
      return train_ssvrn_cmd(cfg, or_default(pairs, cfg.work("pairs.jsonl")), or_default(out_path, cfg.work("ssvrn.json")),
                             out);
    }
    if (c_dov->parsed()) {
      return build_dov_cmd(cfg, or_default(model, cfg.work("ssvrn.json")), or_default(out_path, cfg.work("dov.jsonl")),
                           out);
    }
    if (c_cavgn->parsed()) {
      return train_cavgn_cmd(cfg, or_default(dov, cfg.work("dov.jsonl")), or_default(out_path, cfg.work("cavgn.json")),
                             out);
    }
    if (c_eval->parsed()) {
      return evaluate_cmd(cfg, mode, or_default(out_path, cfg.work("report_" + mode + ".json")),
                          or_default(model, cfg.work("ssvrn.json")), or_default(cavgn, cfg.work("cavgn.json")), mos,
                          out);
    }
    if (c_serve->parsed()) {
      return serve_cmd(cfg, host, port, or_default(session, cfg.work("session")),
                       or_default(dov, cfg.work("dov.jsonl")), out);
    }
    if (c_synth->parsed()) return synth_cmd(cfg, out_path, count, points, out);
  } catch (const std::exception& e) {
    std::string what = e.what();
    std::replace(what.begin(), what.end(), '\n', ' ');
    err << "error: " << what << '\n';
    return 1;
  }
  return 1;
}

}  // namespace pcqa::cli
