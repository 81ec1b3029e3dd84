#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace pcqa {

using Vec3 = Eigen::Vector3d;

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed input at a known line. `line()` is 1-based.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Body shorter than the element counts announced in the header.
class TruncationError : public Error {
 public:
  using Error::Error;
};

/// Colored point set. Positions are kept in double precision.
struct PointCloud {
  std::vector<Vec3> points;
  std::vector<Rgb> colors;
  std::string id;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }

  /// Throws Error if sizes differ, the cloud is empty, or a coordinate is
  /// not finite.
  void validate() const;
};

struct CloudSummary {
  Vec3 centroid = Vec3::Zero();
  Vec3 bbox_min = Vec3::Zero();
  Vec3 bbox_max = Vec3::Zero();
  double diagonal = 0.0;

  /// Largest of the three bbox half-extents.
  double max_half_extent() const;
};

CloudSummary summarize(const PointCloud& cloud);

/// Reads the vertex element of an ascii or binary_little_endian PLY file.
/// Clouds without red/green/blue get a neutral gray (128,128,128).
/// The cloud id is the file stem.
PointCloud load_ply(const std::filesystem::path& path);

/// Parses PLY bytes already in memory; `id` becomes the cloud id.
PointCloud parse_ply(const std::string& bytes, const std::string& id);

/// Writes binary_little_endian with float64 x/y/z and uint8 red/green/blue.
void save_ply(const std::filesystem::path& path, const PointCloud& cloud);

std::string to_ply_bytes(const PointCloud& cloud);

}  // namespace pcqa
