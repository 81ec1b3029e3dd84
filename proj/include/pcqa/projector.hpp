#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <string>
#include <vector>

#include "pcqa/cloud.hpp"
#include "pcqa/view_geometry.hpp"

namespace pcqa {

struct RenderConfig {
  int resolution = 256;
  int splat_radius = 1;
  double margin = 1.25;
  unsigned threads = 1;

  void validate() const;
};

/// Square raster produced by orthographic splatting. Row r / column c cover
/// plane coordinates v / u, with row 0 at v = -h. Background pixels have
/// mask 0, black color, infinite depth and winner -1.
struct ProjectedImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> color;  ///< RGB, row-major
  std::vector<double> depth;        ///< distance along -direction
  std::vector<std::uint8_t> mask;
  std::vector<std::int32_t> winner;  ///< index of the point owning the pixel
  ViewSetup view;
  int splat_radius = 0;

  std::size_t pixel_count() const { return static_cast<std::size_t>(width) * height; }
  std::size_t covered() const;
  std::size_t index(int row, int col) const { return static_cast<std::size_t>(row) * width + col; }
};

/// Pixel column/row of a plane coordinate, or -1 when outside [-h, h].
int pixel_of(double coord, double h, int resolution);

/// Depth key of p: (p - viewpoint) . (-direction). Smaller is nearer.
double depth_key(const ViewSetup& view, const Vec3& p);

/// Z-buffered splatting. Each point writes a disc of `splat_radius` pixels
/// (dx^2 + dy^2 <= r^2) with a per-pixel depth test; equal depths keep the
/// lower point index.
ProjectedImage render(const PointCloud& cloud, const ViewSetup& view, int resolution,
                      int splat_radius);

ProjectedImage render(const PointCloud& cloud, const ViewSetup& view, const RenderConfig& cfg);

/// Element-wise render in input order; images are rendered on cfg.threads
/// workers.
std::vector<ProjectedImage> render_face_set(const PointCloud& cloud,
                                            const std::vector<ViewSetup>& views,
                                            const RenderConfig& cfg);

/// PNG of the color raster with +v pointing up.
std::string encode_png(const ProjectedImage& img);
void write_png(const std::filesystem::path& path, const ProjectedImage& img);

/// uint32 width, uint32 height, then width*height float32, all little-endian,
/// rows in raster order. Background is +inf.
std::string encode_depth(const ProjectedImage& img);
void write_depth(const std::filesystem::path& path, const ProjectedImage& img);

}  // namespace pcqa
