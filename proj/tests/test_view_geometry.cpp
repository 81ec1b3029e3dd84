#include <cmath>
#include <random>

#include "doctest.h"
#include "pcqa/view_geometry.hpp"

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

void check_frame(const ViewSetup& v) {
  CHECK(std::abs(v.direction.norm() - 1.0) <= 1e-9);
  CHECK(std::abs(v.frame_u.norm() - 1.0) <= 1e-9);
  CHECK(std::abs(v.frame_v.norm() - 1.0) <= 1e-9);
  CHECK(std::abs(v.direction.dot(v.frame_u)) <= 1e-9);
  CHECK(std::abs(v.direction.dot(v.frame_v)) <= 1e-9);
  CHECK(std::abs(v.frame_u.dot(v.frame_v)) <= 1e-9);
  CHECK((v.frame_u.cross(v.frame_v) - v.direction).norm() <= 1e-9);
}

}  // namespace

TEST_CASE("default viewpoints of the unit cube") {
  const auto views = default_viewpoints(unit_cube_summary(), 1.25);
  REQUIRE(views.size() == 6);
  CHECK(views[0].viewpoint.isApprox(Vec3(0.5 + 0.625, 0.5, 0.5)));
  CHECK(views[0].region_half_extent == 0.625);
  Vec3 sum = Vec3::Zero();
  for (int f = 0; f < 6; ++f) {
    const ViewSetup& v = views[f];
    CHECK(v.face_index == f);
    check_frame(v);
    sum += v.direction;
    const Vec3 off = v.viewpoint - v.center;
    CHECK(v.direction.dot(off) > 0.0);
    CHECK(v.direction.dot(off) == doctest::Approx(off.norm()));
  }
  CHECK(sum.norm() <= 1e-12);
}

TEST_CASE("default viewpoints reject a degenerate box and a small margin") {
  CloudSummary s;
  s.centroid = s.bbox_min = s.bbox_max = Vec3(1, 2, 3);
  CHECK_THROWS_AS(default_viewpoints(s, 1.25), Error);
  CHECK_THROWS_AS(default_viewpoints(unit_cube_summary(), 0.5), Error);
}

TEST_CASE("candidate grids") {
  const auto views = default_viewpoints(unit_cube_summary(), 1.25);
  for (int count : {9, 25, 49}) {
    for (const ViewSetup& base : views) {
      const CandidateGrid g = sample_candidates(base, count);
      REQUIRE(g.positions.size() == static_cast<std::size_t>(count));
      CHECK(g.positions[g.center_index()] == base.viewpoint);
      const ViewSetup& center_view = g.views[g.center_index()];
      CHECK(center_view.direction == base.direction);
      CHECK(center_view.frame_u == base.frame_u);
      for (std::size_t j = 0; j < g.positions.size(); ++j) {
        CHECK(std::abs((g.positions[j] - base.viewpoint).dot(base.direction)) <= 1e-9);
        const ViewSetup& cv = g.views[j];
        check_frame(cv);
        CHECK(cv.direction.dot(g.positions[j] - base.center) > 0.0);
      }
    }
  }
  CHECK_THROWS_AS(sample_candidates(views[0], 16), Error);
  CHECK_THROWS_AS(sample_candidates(views[0], 10), Error);
}

TEST_CASE("candidate coordinates match a direct enumeration of the cell-center formula") {
  const ViewSetup base = default_viewpoints(unit_cube_summary(), 1.25)[3];
  const double h = base.region_half_extent;
  for (int count : {9, 25, 49}) {
    const int n = static_cast<int>(std::sqrt(count));
    const CandidateGrid g = sample_candidates(base, count);
    const double spacing = 2.0 * h / n;
    for (int row = 0; row < n; ++row) {
      for (int col = 0; col < n; ++col) {
        const double a = -h + (col + 0.5) * spacing;
        const double b = -h + (row + 0.5) * spacing;
        const Vec3 expect = base.viewpoint + a * base.frame_u + b * base.frame_v;
        CHECK((g.positions[row * n + col] - expect).norm() <= 1e-12);
      }
    }
    // Spacing along both axes.
    CHECK((g.positions[1] - g.positions[0]).norm() == doctest::Approx(spacing));
    CHECK((g.positions[n] - g.positions[0]).norm() == doctest::Approx(spacing));
  }
}

TEST_CASE("plane coordinates and lift") {
  const ViewSetup base = default_viewpoints(unit_cube_summary(), 1.25)[4];
  auto [u0, v0] = plane_coords(base, base.viewpoint);
  CHECK(u0 == 0.0);
  CHECK(v0 == 0.0);
  auto [u1, v1] = plane_coords(base, base.viewpoint + 2.0 * base.frame_u);
  CHECK(u1 == doctest::Approx(2.0));
  CHECK(v1 == doctest::Approx(0.0));
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> d(-3, 3);
  for (int i = 0; i < 100; ++i) {
    const Vec3 p = lift(base, d(rng), d(rng));
    auto [u, v] = plane_coords(base, p);
    CHECK((lift(base, u, v) - p).norm() <= 1e-9);
  }
}

TEST_CASE("rotated rigs stay right-handed and centered") {
  const auto rig = default_viewpoints(unit_cube_summary(), 1.25);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Eigen::Matrix3d r = random_rotation(seed);
    CHECK(r.determinant() == doctest::Approx(1.0));
    for (const ViewSetup& v : rotate_rig(rig, r)) {
      check_frame(v);
      CHECK((v.viewpoint - v.center).normalized().isApprox(v.direction, 1e-12));
      CHECK((v.viewpoint - v.center).norm() == doctest::Approx(0.625));
    }
  }
}

TEST_CASE("random region views lie on the region plane") {
  const ViewSetup base = default_viewpoints(unit_cube_summary(), 1.25)[1];
  for (std::uint64_t s = 0; s < 50; ++s) {
    const ViewSetup v = random_region_view(base, s);
    CHECK(std::abs((v.viewpoint - base.viewpoint).dot(base.direction)) <= 1e-9);
    auto [u, w] = plane_coords(base, v.viewpoint);
    CHECK(std::abs(u) <= base.region_half_extent);
    CHECK(std::abs(w) <= base.region_half_extent);
  }
  CHECK(random_region_view(base, 3).viewpoint == random_region_view(base, 3).viewpoint);
}

TEST_CASE("view json round trip") {
  const ViewSetup v = sample_candidates(default_viewpoints(unit_cube_summary(), 1.25)[2], 9).views[1];
  const ViewSetup back = view_from_json(nlohmann::json::parse(view_to_json(v).dump()));
  CHECK(back.viewpoint == v.viewpoint);
  CHECK(back.frame_v == v.frame_v);
  CHECK(back.face_index == v.face_index);
  const auto row = viewpoint_row("loot", v);
  CHECK(row["cloud_id"] == "loot");
  CHECK(row["position"].size() == 3);
}
