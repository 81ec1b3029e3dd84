#include "pcqa/projector.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>

#include <png.h>

#include "pcqa/parallel.hpp"

namespace pcqa {

void RenderConfig::validate() const {
  if (resolution < 16) throw Error("render resolution must be >= 16");
  if (splat_radius < 0) throw Error("splat radius must be >= 0");
  if (!(margin >= 1.0)) throw Error("viewpoint margin must be >= 1");
}

std::size_t ProjectedImage::covered() const {
  return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), std::uint8_t{1}));
}

int pixel_of(double coord, double h, int resolution) {
  if (!(coord >= -h && coord <= h)) return -1;
  const double t = (coord + h) / (2.0 * h) * resolution;
  return std::min(resolution - 1, static_cast<int>(std::floor(t)));
}

double depth_key(const ViewSetup& view, const Vec3& p) {
  return (p - view.viewpoint).dot(-view.direction);
}

ProjectedImage render(const PointCloud& cloud, const ViewSetup& view, int resolution,
                      int splat_radius) {
  if (resolution < 16) throw Error("render resolution must be >= 16");
  if (splat_radius < 0) throw Error("splat radius must be >= 0");
  if (cloud.empty()) throw Error("empty cloud");

  ProjectedImage img;
  img.width = img.height = resolution;
  img.view = view;
  img.splat_radius = splat_radius;
  const std::size_t n = img.pixel_count();
  img.color.assign(3 * n, 0);
  img.depth.assign(n, std::numeric_limits<double>::infinity());
  img.mask.assign(n, 0);
  img.winner.assign(n, -1);

  std::vector<std::pair<int, int>> disc;
  for (int dy = -splat_radius; dy <= splat_radius; ++dy) {
    for (int dx = -splat_radius; dx <= splat_radius; ++dx) {
      if (dx * dx + dy * dy <= splat_radius * splat_radius) disc.emplace_back(dx, dy);
    }
  }

  const double h = view.region_half_extent;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto [u, v] = plane_coords(view, cloud.points[i]);
    const int col = pixel_of(u, h, resolution);
    const int row = pixel_of(v, h, resolution);
    if (col < 0 || row < 0) continue;
    const double z = depth_key(view, cloud.points[i]);
    for (const auto& [dx, dy] : disc) {
      const int c = col + dx;
      const int r = row + dy;
      if (c < 0 || r < 0 || c >= resolution || r >= resolution) continue;
      const std::size_t px = img.index(r, c);
      // Points arrive in index order, so strict < keeps the lower index on ties.
      if (z < img.depth[px]) {
        img.depth[px] = z;
        img.winner[px] = static_cast<std::int32_t>(i);
        img.mask[px] = 1;
        img.color[3 * px + 0] = cloud.colors[i].r;
        img.color[3 * px + 1] = cloud.colors[i].g;
        img.color[3 * px + 2] = cloud.colors[i].b;
      }
    }
  }
  return img;
}

ProjectedImage render(const PointCloud& cloud, const ViewSetup& view, const RenderConfig& cfg) {
  return render(cloud, view, cfg.resolution, cfg.splat_radius);
}

std::vector<ProjectedImage> render_face_set(const PointCloud& cloud,
                                            const std::vector<ViewSetup>& views,
                                            const RenderConfig& cfg) {
  cfg.validate();
  std::vector<ProjectedImage> out(views.size());
  parallel_for(views.size(), cfg.threads,
               [&](std::size_t i) { out[i] = render(cloud, views[i], cfg); });
  return out;
}

std::string encode_png(const ProjectedImage& img) {
  // Flip rows so that +v is up in the picture.
  std::vector<std::uint8_t> rgb(img.color.size());
  const std::size_t stride = 3 * static_cast<std::size_t>(img.width);
  for (int r = 0; r < img.height; ++r) {
    std::copy_n(img.color.begin() + static_cast<std::ptrdiff_t>(r * stride), stride,
                rgb.begin() + static_cast<std::ptrdiff_t>((img.height - 1 - r) * stride));
  }
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&image, nullptr, &size, 0, rgb.data(), 0, nullptr)) {
    throw Error(std::string("png encode failed: ") + image.message);
  }
  std::string out(size, '\0');
  if (!png_image_write_to_memory(&image, out.data(), &size, 0, rgb.data(), 0, nullptr)) {
    throw Error(std::string("png encode failed: ") + image.message);
  }
  out.resize(size);
  return out;
}

namespace {
void write_bytes(const std::filesystem::path& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}
}  // namespace

void write_png(const std::filesystem::path& path, const ProjectedImage& img) {
  write_bytes(path, encode_png(img));
}

std::string encode_depth(const ProjectedImage& img) {
  std::string out;
  out.reserve(8 + 4 * img.pixel_count());
  put_u32(out, static_cast<std::uint32_t>(img.width));
  put_u32(out, static_cast<std::uint32_t>(img.height));
  for (double d : img.depth) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(d)));
  return out;
}

void write_depth(const std::filesystem::path& path, const ProjectedImage& img) {
  write_bytes(path, encode_depth(img));
}

}  // namespace pcqa
