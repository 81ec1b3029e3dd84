#include "pcqa/view_geometry.hpp"

#include <cmath>
#include <random>

#include "pcqa/seeding.hpp"

namespace pcqa {

std::vector<ViewSetup> default_viewpoints(const CloudSummary& summary, double margin) {
  if (!(margin >= 1.0)) throw Error("viewpoint margin must be >= 1");
  const double half = summary.max_half_extent();
  if (!(half > 0.0)) throw Error("degenerate bounding box: zero extent on every axis");
  const double h = margin * half;

  // (direction, frame_u, frame_v) per face, right-handed: u x v = direction.
  const std::array<std::array<Vec3, 3>, kFaceCount> frames{{
      {Vec3::UnitX(), Vec3::UnitY(), Vec3::UnitZ()},
      {-Vec3::UnitX(), -Vec3::UnitY(), Vec3::UnitZ()},
      {Vec3::UnitY(), -Vec3::UnitX(), Vec3::UnitZ()},
      {-Vec3::UnitY(), Vec3::UnitX(), Vec3::UnitZ()},
      {Vec3::UnitZ(), Vec3::UnitX(), Vec3::UnitY()},
      {-Vec3::UnitZ(), -Vec3::UnitX(), Vec3::UnitY()},
  }};

  std::vector<ViewSetup> views;
  views.reserve(kFaceCount);
  for (int f = 0; f < kFaceCount; ++f) {
    ViewSetup v;
    v.center = summary.centroid;
    v.direction = frames[f][0];
    v.frame_u = frames[f][1];
    v.frame_v = frames[f][2];
    v.viewpoint = summary.centroid + h * v.direction;
    v.region_half_extent = h;
    v.face_index = f;
    views.push_back(v);
  }
  return views;
}

std::vector<ViewSetup> rotate_rig(const std::vector<ViewSetup>& rig, const Eigen::Matrix3d& rotation) {
  std::vector<ViewSetup> out = rig;
  for (ViewSetup& v : out) {
    v.viewpoint = v.center + rotation * (v.viewpoint - v.center);
    v.direction = (rotation * v.direction).normalized();
    v.frame_u = (rotation * v.frame_u).normalized();
    v.frame_v = v.direction.cross(v.frame_u);
  }
  return out;
}

Eigen::Matrix3d random_rotation(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> n(0.0, 1.0);
  Eigen::Quaterniond q;
  do {
    q = Eigen::Quaterniond(n(rng), n(rng), n(rng), n(rng));
  } while (q.norm() < 1e-6);
  return q.normalized().toRotationMatrix();
}

std::pair<double, double> plane_coords(const ViewSetup& view, const Vec3& p) {
  const Vec3 d = p - view.viewpoint;
  return {d.dot(view.frame_u), d.dot(view.frame_v)};
}

Vec3 lift(const ViewSetup& view, double u, double v) {
  return view.viewpoint + u * view.frame_u + v * view.frame_v;
}

ViewSetup view_toward_center(const ViewSetup& base, const Vec3& position) {
  if (position == base.viewpoint) return base;
  const Vec3 offset = position - base.center;
  if (!(offset.norm() > 0.0)) throw Error("viewpoint coincides with the center");
  ViewSetup v = base;
  v.viewpoint = position;
  v.direction = offset.normalized();
  Vec3 u = base.frame_u - base.frame_u.dot(v.direction) * v.direction;
  if (u.norm() < 1e-12) {
    u = base.frame_v - base.frame_v.dot(v.direction) * v.direction;
  }
  v.frame_u = u.normalized();
  v.frame_v = v.direction.cross(v.frame_u);
  return v;
}

int CandidateGrid::side() const { return static_cast<int>(std::lround(std::sqrt(count))); }

double grid_offset(int k, int n, double h) {
  // -h + (k + 1/2) * 2h/n, written so the middle cell of odd n is exactly 0.
  return static_cast<double>(2 * k + 1 - n) * h / n;
}

CandidateGrid sample_candidates(const ViewSetup& base, int count) {
  if (count != 9 && count != 25 && count != 49) {
    throw Error("candidate count must be 9, 25 or 49, got " + std::to_string(count));
  }
  CandidateGrid grid;
  grid.base = base;
  grid.count = count;
  const int n = grid.side();
  const double h = base.region_half_extent;
  grid.positions.reserve(count);
  grid.views.reserve(count);
  for (int row = 0; row < n; ++row) {
    for (int col = 0; col < n; ++col) {
      const Vec3 p = lift(base, grid_offset(col, n, h), grid_offset(row, n, h));
      grid.positions.push_back(p);
      grid.views.push_back(view_toward_center(base, p));
    }
  }
  return grid;
}

std::uint64_t rig_seed_for(std::uint64_t seed, const std::string& cloud_id) {
  return hash_combine(derive_seed(seed, "rigs"), hash_name(cloud_id));
}

std::vector<CandidateGrid> rig_grids(const CloudSummary& summary, double margin, int candidates,
                                     int rigs, std::uint64_t rig_seed) {
  if (rigs < 1) throw Error("need at least one rig");
  const std::vector<ViewSetup> canonical = default_viewpoints(summary, margin);
  std::vector<CandidateGrid> grids;
  grids.reserve(static_cast<std::size_t>(rigs) * kFaceCount);
  for (int r = 0; r < rigs; ++r) {
    const std::vector<ViewSetup> rig =
        r == 0 ? canonical
               : rotate_rig(canonical, random_rotation(hash_combine(rig_seed, static_cast<std::uint64_t>(r))));
    for (const ViewSetup& base : rig) {
      grids.push_back(sample_candidates(base, candidates));
      grids.back().rig = r;
    }
  }
  return grids;
}

ViewSetup random_region_view(const ViewSetup& base, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double h = base.region_half_extent;
  std::uniform_real_distribution<double> coord(-h, h);
  const double u = coord(rng);
  const double v = coord(rng);
  return view_toward_center(base, lift(base, u, v));
}

nlohmann::json vec_to_json(const Vec3& v) { return nlohmann::json::array({v.x(), v.y(), v.z()}); }

Vec3 vec_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 3) throw Error("expected a 3-vector");
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

nlohmann::json view_to_json(const ViewSetup& view) {
  return {{"viewpoint", vec_to_json(view.viewpoint)},
          {"center", vec_to_json(view.center)},
          {"direction", vec_to_json(view.direction)},
          {"region_half_extent", view.region_half_extent},
          {"frame_u", vec_to_json(view.frame_u)},
          {"frame_v", vec_to_json(view.frame_v)},
          {"face_index", view.face_index}};
}

ViewSetup view_from_json(const nlohmann::json& j) {
  ViewSetup v;
  v.viewpoint = vec_from_json(j.at("viewpoint"));
  v.center = vec_from_json(j.at("center"));
  v.direction = vec_from_json(j.at("direction"));
  v.region_half_extent = j.at("region_half_extent").get<double>();
  v.frame_u = vec_from_json(j.at("frame_u"));
  v.frame_v = vec_from_json(j.at("frame_v"));
  v.face_index = j.at("face_index").get<int>();
  return v;
}

nlohmann::json viewpoint_row(const std::string& cloud_id, const ViewSetup& view) {
  return {{"cloud_id", cloud_id},
          {"face_index", view.face_index},
          {"position", vec_to_json(view.viewpoint)},
          {"direction", vec_to_json(view.direction)}};
}

}  // namespace pcqa
