#include "run_config.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace pcqa::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  T out{};
  const auto [end, ec] = std::from_chars(value.data(), value.data() + value.size(), out);
  if (ec != std::errc() || end != value.data() + value.size()) {
    throw Error("config key '" + key + "': bad number '" + value + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true" || value == "1" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw Error("config key '" + key + "': bad boolean '" + value + "'");
}

std::vector<std::string> parse_list(const std::string& value) {
  std::vector<std::string> out;
  std::stringstream s(value);
  std::string item;
  while (std::getline(s, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

}  // namespace

std::map<std::string, std::string> parse_config_text(const std::string& text) {
  std::map<std::string, std::string> out;
  std::istringstream in(text);
  std::string raw;
  for (std::size_t line = 1; std::getline(in, raw); ++line) {
    const std::string body = trim(raw.substr(0, raw.find('#')));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(line, "expected key = value");
    const std::string key = trim(body.substr(0, eq));
    if (key.empty()) throw ParseError(line, "empty key");
    out[key] = trim(body.substr(eq + 1));
  }
  return out;
}

void RunConfig::apply(const std::map<std::string, std::string>& values) {
  for (const auto& [key, v] : values) {
    if (key == "clouds_dir") {
      clouds_dir = v;
    } else if (key == "work_dir") {
      work_dir = v;
    } else if (key == "resolution") {
      render.resolution = parse_number<int>(key, v);
    } else if (key == "splat_radius") {
      render.splat_radius = parse_number<int>(key, v);
    } else if (key == "margin") {
      render.margin = parse_number<double>(key, v);
    } else if (key == "candidates") {
      candidates = parse_number<int>(key, v);
    } else if (key == "distortions") {
      distortions = parse_list(v);
    } else if (key == "levels") {
      levels = parse_number<int>(key, v);
    } else if (key == "rigs_per_cloud") {
      rigs_per_cloud = parse_number<int>(key, v);
    } else if (key == "seed") {
      seed = parse_number<std::uint64_t>(key, v);
    } else if (key == "threads") {
      threads = parse_number<unsigned>(key, v);
    } else if (key == "dataset") {
      dataset = v;
    } else if (key == "pairs.dry_run") {
      dry_run = parse_bool(key, v);
    } else if (key == "dataset.clouds") {
      dataset_clouds = parse_number<int>(key, v);
    } else if (key == "distortion_groups") {
      distortion_groups = parse_number<int>(key, v);
    } else if (key == "ssvrn.learning_rate") {
      ssvrn.learning_rate = parse_number<double>(key, v);
    } else if (key == "ssvrn.epochs") {
      ssvrn.epochs = parse_number<int>(key, v);
    } else if (key == "ssvrn.decay_every") {
      ssvrn.decay_every = parse_number<int>(key, v);
    } else if (key == "ssvrn.decay") {
      ssvrn.decay = parse_number<double>(key, v);
    } else if (key == "ssvrn.batch_size") {
      ssvrn.batch_size = parse_number<int>(key, v);
    } else if (key == "ssvrn.train_fraction") {
      ssvrn.train_fraction = parse_number<double>(key, v);
    } else if (key == "cavgn.learning_rate") {
      cavgn.learning_rate = parse_number<double>(key, v);
    } else if (key == "cavgn.epochs") {
      cavgn.epochs = parse_number<int>(key, v);
    } else if (key == "cavgn.decay_every") {
      cavgn.decay_every = parse_number<int>(key, v);
    } else if (key == "cavgn.decay") {
      cavgn.decay = parse_number<double>(key, v);
    } else if (key == "cavgn.batch_size") {
      cavgn.batch_size = parse_number<int>(key, v);
    } else if (key == "cavgn.train_fraction") {
      cavgn.train_fraction = parse_number<double>(key, v);
    } else if (key == "cavgn.tokens") {
      cavgn.tokens = parse_number<int>(key, v);
    } else {
      throw Error("unknown config key '" + key + "'");
    }
  }
  render.threads = threads;
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config " + path.string());
  std::ostringstream s;
  s << in.rdbuf();
  std::map<std::string, std::string> values;
  try {
    values = parse_config_text(s.str());
  } catch (const ParseError& e) {
    throw ParseError(e.line(), path.string() + ": " + e.what());
  }
  const std::filesystem::path base = path.parent_path();
  for (const char* key : {"clouds_dir", "work_dir"}) {
    auto it = values.find(key);
    if (it != values.end() && std::filesystem::path(it->second).is_relative()) {
      it->second = (base / it->second).lexically_normal().string();
    }
  }
  apply(values);
}

void RunConfig::validate() const {
  if (candidates != 9 && candidates != 25 && candidates != 49) {
    throw Error("candidates must be 9, 25 or 49, got " + std::to_string(candidates));
  }
  render.validate();
  if (levels < 2) throw Error("levels must be at least 2");
  if (rigs_per_cloud < 1) throw Error("rigs_per_cloud must be at least 1");
  if (threads < 1) throw Error("threads must be at least 1");
  if (distortions.empty()) throw Error("distortions must name at least one type");
  for (const std::string& t : distortions) DistortionType::parse(t);
  if (ssvrn.epochs < 1 || cavgn.epochs < 1) throw Error("epochs must be at least 1");
  if (cavgn.tokens < 1) throw Error("cavgn.tokens must be at least 1");
}

void RunConfig::require_clouds_dir() const {
  if (clouds_dir.empty()) throw Error("clouds_dir is not set");
  if (!std::filesystem::is_directory(clouds_dir)) throw Error("clouds_dir " + clouds_dir.string() + " does not exist");
}

nlohmann::json RunConfig::echo() const {
  return {{"clouds_dir", clouds_dir.string()},
          {"resolution", render.resolution},
          {"splat_radius", render.splat_radius},
          {"margin", render.margin},
          {"candidates", candidates},
          {"distortions", distortions},
          {"levels", levels},
          {"rigs_per_cloud", rigs_per_cloud},
          {"seed", seed}};
}

}  // namespace pcqa::cli
