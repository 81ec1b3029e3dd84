#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pcqa/cavgn.hpp"
#include "pcqa/distortion.hpp"
#include "run_config.hpp"

namespace pcqa::cli {

/// Runs one subcommand; `args` excludes the program name. Returns the exit
/// code; errors print a one-line diagnostic to `err`.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// Every `*.ply` of `dir`, sorted by file name.
std::vector<PointCloud> load_reference_clouds(const std::filesystem::path& dir);

/// Distortion ladders of every reference cloud. Each cloud draws from
/// derive_seed(seed, "distort") mixed with its id.
std::vector<DistortionLadder> make_ladders(const RunConfig& cfg);

/// Reference and variants of every ladder under their store file names.
CloudStore ladder_store(const std::vector<DistortionLadder>& ladders);

}  // namespace pcqa::cli
