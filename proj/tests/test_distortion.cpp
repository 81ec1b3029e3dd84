#include <cmath>
#include <random>

#include "doctest.h"
#include "pcqa/distortion.hpp"
#include "pcqa/synthetic.hpp"

using namespace pcqa;

namespace {

PointCloud gray_cube_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointCloud c;
  c.id = "cube";
  for (std::size_t i = 0; i < n; ++i) {
    c.points.emplace_back(u(rng), u(rng), u(rng));
    c.colors.push_back({128, 128, 128});
  }
  return c;
}

double mean_color_delta(const PointCloud& a, const PointCloud& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    s += std::abs(a.colors[i].r - b.colors[i].r) + std::abs(a.colors[i].g - b.colors[i].g) +
         std::abs(a.colors[i].b - b.colors[i].b);
  }
  return s / (3.0 * a.size());
}

double mean_displacement(const PointCloud& a, const PointCloud& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a.points[i] - b.points[i]).norm();
  return s / a.size();
}

// Mean distance from each reference point to its snapped position; the
// quantizer merges points, so compare against the nearest output point.
double mean_nearest_distance(const PointCloud& ref, const PointCloud& out) {
  double s = 0.0;
  for (const Vec3& p : ref.points) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec3& q : out.points) best = std::min(best, (p - q).squaredNorm());
    s += std::sqrt(best);
  }
  return s / ref.size();
}

}  // namespace

TEST_CASE("geometry noise at the top level has sigma 0.01 * diagonal") {
  const PointCloud cloud = gray_cube_cloud(100000, 3);
  const double diag = summarize(cloud).diagonal;
  const PointCloud noisy =
      apply_distortion(cloud, {DistortionKind::GeometryGaussianNoise, 4, 4, 99});
  // Monte-Carlo oracle: empirical std of per-coordinate displacement.
  double sum = 0.0, sum2 = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    for (int k = 0; k < 3; ++k) {
      const double d = noisy.points[i][k] - cloud.points[i][k];
      sum += d;
      sum2 += d * d;
      ++n;
    }
  }
  const double mean = sum / n;
  const double sigma = std::sqrt(sum2 / n - mean * mean);
  CHECK(std::abs(sigma - 0.01 * diag) <= 0.05 * 0.01 * diag);
  CHECK(noisy.colors == cloud.colors);
}

TEST_CASE("color noise ladder is monotone in level") {
  const PointCloud cloud = gray_cube_cloud(5000, 5);
  double prev = 0.0;
  for (int level = 1; level <= 6; ++level) {
    const PointCloud n = apply_distortion(cloud, {DistortionKind::ColorNoise, level, 6, 17});
    const double d = mean_color_delta(cloud, n);
    CHECK(d > prev);
    prev = d;
    CHECK(n.points == cloud.points);
  }
}

TEST_CASE("octree quantization leaves on-grid points in place") {
  // Corners pin the bbox to [0,1]^3; all coordinates are multiples of 1/8,
  // which are nodes of every grid with at least 8 cells per axis.
  PointCloud c;
  c.id = "grid";
  for (int i = 0; i <= 8; ++i) {
    for (int j = 0; j <= 8; j += 2) {
      c.points.emplace_back(i / 8.0, j / 8.0, ((i + j) % 9) / 8.0);
      c.colors.push_back({static_cast<std::uint8_t>(10 * i), static_cast<std::uint8_t>(10 * j), 7});
    }
  }
  c.points.emplace_back(0.0, 0.0, 0.0);  // duplicate of an existing node
  c.colors.push_back({0, 0, 0});
  c.points.emplace_back(1.0, 1.0, 1.0);
  c.colors.push_back({1, 1, 1});
  // Level 2 of 4: depth 10 - round(3) = 7, i.e. 128 cells per axis.
  const PointCloud q = apply_distortion(c, {DistortionKind::OctreeQuantize, 2, 4, 0});
  CHECK(q.size() <= c.size());
  for (const Vec3& p : q.points) {
    bool found = false;
    for (const Vec3& r : c.points) found = found || (p == r);
    CHECK(found);
  }
  for (const Vec3& r : c.points) {
    bool found = false;
    for (const Vec3& p : q.points) found = found || (p == r);
    CHECK(found);
  }
}

TEST_CASE("octree quantization averages colors of merged points") {
  PointCloud c;
  c.points = {Vec3(0, 0, 0), Vec3(1e-6, 0, 0), Vec3(1, 1, 1)};
  c.colors = {{10, 20, 30}, {20, 40, 61}, {0, 0, 0}};
  const PointCloud q = apply_distortion(c, {DistortionKind::OctreeQuantize, 6, 6, 0});
  REQUIRE(q.size() == 2);
  CHECK(q.points[0] == Vec3(0, 0, 0));
  CHECK(q.colors[0] == Rgb{15, 30, 46});
}

TEST_CASE("downsample keeps the expected fraction and at least one point") {
  const PointCloud cloud = gray_cube_cloud(1000, 1);
  const PointCloud d = apply_distortion(cloud, {DistortionKind::Downsample, 2, 4, 3});
  CHECK(d.size() == 600);
  PointCloud one = gray_cube_cloud(1, 1);
  CHECK(apply_distortion(one, {DistortionKind::Downsample, 4, 4, 3}).size() == 1);
}

TEST_CASE("invalid specs are rejected") {
  const PointCloud cloud = gray_cube_cloud(10, 1);
  CHECK_THROWS_AS(apply_distortion(cloud, {DistortionKind::ColorNoise, 0, 4, 0}), Error);
  CHECK_THROWS_AS(apply_distortion(cloud, {DistortionKind::ColorNoise, 5, 4, 0}), Error);
  CHECK_THROWS_AS(apply_distortion(cloud, {DistortionKind::ColorNoise, 1, 1, 0}), Error);
  CHECK_THROWS_AS(apply_distortion(PointCloud{}, {DistortionKind::ColorNoise, 1, 4, 0}), Error);
  CHECK_THROWS_AS(kind_from_code("XX"), Error);
  CHECK_THROWS_AS(build_ladder(cloud, {}, 3, 0), Error);
}

TEST_CASE("ladder counting and determinism") {
  const PointCloud cloud = make_synthetic_cloud(0, 400, 2);
  const std::vector<DistortionType> types = {DistortionType::parse("CN"), DistortionType::parse("GGN")};
  const DistortionLadder a = build_ladder(cloud, types, 3, 42);
  CHECK(a.variants.size() == 6);
  CHECK(&a.at(0, 0) == &a.reference);
  CHECK(a.variants[0].type.name() == "CN");
  CHECK(a.variants[3].type.name() == "GGN");
  CHECK(a.variants[4].level == 2);
  const DistortionLadder b = build_ladder(cloud, types, 3, 42, 3);
  for (std::size_t i = 0; i < a.variants.size(); ++i) {
    CHECK(a.variants[i].cloud.points == b.variants[i].cloud.points);
    CHECK(a.variants[i].cloud.colors == b.variants[i].cloud.colors);
  }
  const DistortionLadder c = build_ladder(cloud, types, 3, 43);
  CHECK(c.variants[0].cloud.colors != a.variants[0].cloud.colors);
}

TEST_CASE("all four kinds, six levels: severity strictly increases with level") {
  const PointCloud cloud = make_synthetic_cloud(3, 3000, 9);
  std::vector<DistortionType> types;
  for (const char* k : {"CN", "GGN", "DS", "OT"}) types.push_back(DistortionType::parse(k));
  const DistortionLadder ladder = build_ladder(cloud, types, 6, 1234);
  REQUIRE(ladder.variants.size() == 24);
  std::array<double, 4> prev{-1, -1, -1, -1};
  for (const LadderVariant& v : ladder.variants) {
    const std::size_t t = v.type.stages[0] == DistortionKind::ColorNoise              ? 0
                          : v.type.stages[0] == DistortionKind::GeometryGaussianNoise ? 1
                          : v.type.stages[0] == DistortionKind::Downsample            ? 2
                                                                                       : 3;
    double sev = 0.0;
    switch (t) {
      case 0: sev = mean_color_delta(cloud, v.cloud); break;
      case 1: sev = mean_displacement(cloud, v.cloud); break;
      case 2: sev = 1.0 - static_cast<double>(v.cloud.size()) / cloud.size(); break;
      default: sev = mean_nearest_distance(cloud, v.cloud); break;
    }
    if (v.level > 1) CHECK(sev > prev[t]);
    prev[t] = sev;
    for (const Vec3& p : v.cloud.points) CHECK(p.allFinite());
  }
}

TEST_CASE("mixed types compose sequentially") {
  const PointCloud cloud = make_synthetic_cloud(1, 1000, 4);
  const DistortionType mixed = DistortionType::parse("DS+CN");
  CHECK(mixed.name() == "DS+CN");
  const PointCloud out = apply_type(cloud, mixed, 3, 6, 77);
  CHECK(out.size() == static_cast<std::size_t>(std::llround(1000 * (1.0 - 0.8 * 0.5))));
  CHECK(out.colors != apply_type(cloud, DistortionType::parse("DS"), 3, 6, 77).colors);
}

TEST_CASE("pseudo MOS ladder") {
  CHECK(pseudo_mos(0, 6) == 100.0);
  CHECK(pseudo_mos(6, 6) == doctest::Approx(100.0 / 7.0));
  for (int l = 1; l <= 6; ++l) CHECK(pseudo_mos(l, 6) < pseudo_mos(l - 1, 6));
  CHECK(variant_file_name("loot", "CN", 3) == "loot__CN_3.ply");
}
