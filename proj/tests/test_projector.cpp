#include <bit>
#include <random>

#include "doctest.h"
#include "pcqa/projector.hpp"
#include "pcqa/synthetic.hpp"
#include "render_oracle.hpp"

using namespace pcqa;

namespace {

CloudSummary unit_cube_summary() {
  CloudSummary s;
  s.bbox_min = Vec3::Zero();
  s.bbox_max = Vec3::Ones();
  s.centroid = Vec3::Constant(0.5);
  s.diagonal = std::sqrt(3.0);
  return s;
}

void check_invariants(const ProjectedImage& img) {
  CHECK(img.width == img.height);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    const bool m = img.mask[i] == 1;
    CHECK(m == std::isfinite(img.depth[i]));
    CHECK(m == (img.winner[i] >= 0));
    if (!m) CHECK((img.color[3 * i] | img.color[3 * i + 1] | img.color[3 * i + 2]) == 0);
  }
}

}  // namespace

TEST_CASE("single point at the centroid covers the center disc") {
  const ViewSetup view = default_viewpoints(unit_cube_summary(), 1.25)[0];
  PointCloud c;
  c.points = {Vec3::Constant(0.5)};
  c.colors = {{200, 100, 50}};
  const ProjectedImage img = render(c, view, 64, 1);
  check_invariants(img);
  CHECK(img.covered() == 5);
  for (auto [r, col] : {std::pair{32, 32}, {31, 32}, {33, 32}, {32, 31}, {32, 33}}) {
    const std::size_t px = img.index(r, col);
    REQUIRE(img.mask[px] == 1);
    CHECK(img.depth[px] == doctest::Approx(0.625));
    CHECK(img.color[3 * px] == 200);
  }
}

TEST_CASE("nearer point wins the pixel") {
  const ViewSetup view = default_viewpoints(unit_cube_summary(), 1.25)[0];  // looking along -X
  PointCloud c;
  c.points = {Vec3(0.2, 0.5, 0.5), Vec3(0.9, 0.5, 0.5)};
  c.colors = {{255, 0, 0}, {0, 255, 0}};
  const ProjectedImage img = render(c, view, 32, 0);
  const std::size_t px = img.index(16, 16);
  CHECK(img.winner[px] == 1);
  CHECK(img.color[3 * px + 1] == 255);
  CHECK(img.covered() == 1);
}

TEST_CASE("equal depths keep the lower index") {
  const ViewSetup view = default_viewpoints(unit_cube_summary(), 1.25)[2];
  PointCloud c;
  c.points = {Vec3(0.5, 0.5, 0.5), Vec3(0.5, 0.5, 0.5), Vec3(0.5, 0.5, 0.5)};
  c.colors = {{1, 1, 1}, {2, 2, 2}, {3, 3, 3}};
  const ProjectedImage img = render(c, view, 16, 2);
  for (std::size_t i = 0; i < img.pixel_count(); ++i) {
    if (img.mask[i]) CHECK(img.winner[i] == 0);
  }
}

TEST_CASE("renderer matches the brute-force oracle") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 30; ++trial) {
    const PointCloud cloud = testing::random_small_cloud(rng);
    const auto views = default_viewpoints(summarize(cloud), 1.25);
    const ViewSetup view = sample_candidates(views[trial % 6], 9).views[trial % 9];
    const int res = 16 + trial % 17;
    const int radius = trial % 3;
    const ProjectedImage img = render(cloud, view, res, radius);
    check_invariants(img);
    const auto oracle = testing::oracle_render(cloud, view, res, radius);
    CHECK(img.winner == oracle.winner);
    for (std::size_t i = 0; i < img.pixel_count(); ++i) {
      CHECK(std::bit_cast<std::uint64_t>(img.depth[i]) == std::bit_cast<std::uint64_t>(oracle.depth[i]));
    }
  }
}

TEST_CASE("points outside the region are clipped") {
  const ViewSetup view = default_viewpoints(unit_cube_summary(), 1.0)[4];
  PointCloud c;
  c.points = {Vec3(5.0, 0.5, 0.5), Vec3(0.5, 0.5, 0.5)};
  c.colors = {{9, 9, 9}, {8, 8, 8}};
  const ProjectedImage img = render(c, view, 16, 0);
  CHECK(img.covered() == 1);
  CHECK_THROWS_AS(render(c, view, 8, 0), Error);
  CHECK_THROWS_AS(render(PointCloud{}, view, 16, 0), Error);
}

TEST_CASE("translation equivariance with exactly representable offsets") {
  // Dyadic coordinates keep every subtraction exact, so the raster must not
  // change at all.
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> q(-512, 512);
  PointCloud c;
  for (int i = 0; i < 300; ++i) {
    c.points.emplace_back(q(rng) / 512.0, q(rng) / 512.0, q(rng) / 512.0);
    c.colors.push_back({static_cast<std::uint8_t>(i), 0, 0});
  }
  ViewSetup view;
  view.center = Vec3::Zero();
  view.viewpoint = Vec3(1.25, 0, 0);
  view.direction = Vec3::UnitX();
  view.frame_u = Vec3::UnitY();
  view.frame_v = Vec3::UnitZ();
  view.region_half_extent = 1.25;
  const Vec3 t(16.0, -8.0, 32.0);
  PointCloud moved = c;
  for (Vec3& p : moved.points) p += t;
  ViewSetup moved_view = view;
  moved_view.viewpoint += t;
  moved_view.center += t;
  const ProjectedImage a = render(c, view, 64, 1);
  const ProjectedImage b = render(moved, moved_view, 64, 1);
  CHECK(a.color == b.color);
  CHECK(a.mask == b.mask);
  CHECK(a.winner == b.winner);
  CHECK(a.depth == b.depth);
}

TEST_CASE("point order only matters through ties") {
  const PointCloud cloud = make_synthetic_cloud(2, 2000, 5);
  const ViewSetup view = default_viewpoints(summarize(cloud), 1.25)[1];
  PointCloud reversed = cloud;
  std::reverse(reversed.points.begin(), reversed.points.end());
  std::reverse(reversed.colors.begin(), reversed.colors.end());
  const ProjectedImage a = render(cloud, view, 64, 1);
  const ProjectedImage b = render(reversed, view, 64, 1);
  CHECK(a.depth == b.depth);
  for (std::size_t i = 0; i < a.pixel_count(); ++i) {
    if (!a.mask[i]) continue;
    const auto wa = static_cast<std::size_t>(a.winner[i]);
    const auto wb = cloud.size() - 1 - static_cast<std::size_t>(b.winner[i]);
    if (wa != wb) CHECK(depth_key(view, cloud.points[wa]) == depth_key(view, cloud.points[wb]));
  }
}

TEST_CASE("batch rendering equals sequential rendering and follows input order") {
  const PointCloud cloud = make_synthetic_cloud(0, 3000, 8);
  auto views = default_viewpoints(summarize(cloud), 1.25);
  RenderConfig cfg;
  cfg.resolution = 48;
  cfg.threads = 3;
  const auto batch = render_face_set(cloud, views, cfg);
  REQUIRE(batch.size() == 6);
  for (std::size_t i = 0; i < views.size(); ++i) {
    const ProjectedImage one = render(cloud, views[i], cfg);
    CHECK(batch[i].color == one.color);
    CHECK(batch[i].depth == one.depth);
  }
  std::reverse(views.begin(), views.end());
  const auto permuted = render_face_set(cloud, views, cfg);
  for (std::size_t i = 0; i < views.size(); ++i) CHECK(permuted[i].color == batch[5 - i].color);
}

TEST_CASE("png and depth encodings") {
  const PointCloud cloud = make_synthetic_cloud(1, 500, 1);
  const ProjectedImage img = render(cloud, default_viewpoints(summarize(cloud), 1.25)[0], 32, 1);
  const std::string png = encode_png(img);
  REQUIRE(png.size() > 8);
  CHECK(png.substr(1, 3) == "PNG");
  const std::string depth = encode_depth(img);
  REQUIRE(depth.size() == 8 + 4 * 32 * 32);
  CHECK(static_cast<unsigned char>(depth[0]) == 32);
  CHECK(static_cast<unsigned char>(depth[4]) == 32);
  std::uint32_t bits = 0;
  for (int i = 0; i < 4; ++i) bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(depth[8 + i])) << (8 * i);
  CHECK(std::bit_cast<float>(bits) == static_cast<float>(img.depth[0]));
}
