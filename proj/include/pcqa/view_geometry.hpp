#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Geometry>
#include "json.hpp"

#include "pcqa/cloud.hpp"

namespace pcqa {

/// A viewpoint with its square projection region. (frame_u, frame_v,
/// direction) is a right-handed orthonormal frame and the viewpoint is the
/// center of the region.
struct ViewSetup {
  Vec3 viewpoint = Vec3::Zero();
  Vec3 center = Vec3::Zero();
  Vec3 direction = Vec3::UnitX();  ///< normalize(viewpoint - center)
  double region_half_extent = 1.0;
  Vec3 frame_u = Vec3::UnitY();
  Vec3 frame_v = Vec3::UnitZ();
  int face_index = 0;
};

/// Face order: +X, -X, +Y, -Y, +Z, -Z.
constexpr int kFaceCount = 6;

/// Cube-face viewpoints around the centroid. Half-side and region half
/// extent are both margin * max bbox half-extent.
std::vector<ViewSetup> default_viewpoints(const CloudSummary& summary, double margin = 1.25);

/// Same rig rotated rigidly about the centroid.
std::vector<ViewSetup> rotate_rig(const std::vector<ViewSetup>& rig, const Eigen::Matrix3d& rotation);

/// Uniformly distributed proper rotation drawn from `seed`.
Eigen::Matrix3d random_rotation(std::uint64_t seed);

/// (p - viewpoint) expressed in the region frame.
std::pair<double, double> plane_coords(const ViewSetup& view, const Vec3& p);
Vec3 lift(const ViewSetup& view, double u, double v);

/// View from a point on the base region looking at the base center. The
/// frame is re-derived perpendicular to the new direction by projecting
/// base.frame_u; the region half extent is kept. A position equal to the
/// base viewpoint returns the base view unchanged.
ViewSetup view_toward_center(const ViewSetup& base, const Vec3& position);

struct CandidateGrid {
  ViewSetup base;
  int rig = 0;  ///< 0 is the canonical cube rig
  int count = 9;  ///< N_v
  std::vector<Vec3> positions;
  std::vector<ViewSetup> views;  ///< one per position, see view_toward_center

  int side() const;
  /// Index of the candidate at the region center.
  int center_index() const { return (count - 1) / 2; }
};

/// In-plane offset of cell k of an n-cell partition of [-h, h].
double grid_offset(int k, int n, double h);

/// N_v in {9, 25, 49}; candidates are cell centers of a sqrt(N_v) square
/// partition of the region, row-major with u varying fastest.
CandidateGrid sample_candidates(const ViewSetup& base, int count);

/// Rig seed of a cloud: every variant of a cloud shares its rig rotations.
std::uint64_t rig_seed_for(std::uint64_t seed, const std::string& cloud_id);

/// Candidate grids for `rigs` cube rigs, rig-major then face order. Rig 0
/// is the canonical axis-aligned rig; rig r > 0 is rotated by
/// random_rotation(hash(rig_seed, r)).
std::vector<CandidateGrid> rig_grids(const CloudSummary& summary, double margin, int candidates,
                                     int rigs, std::uint64_t rig_seed);

/// Point on the base region chosen uniformly at random, as a view toward
/// the center.
ViewSetup random_region_view(const ViewSetup& base, std::uint64_t seed);

nlohmann::json vec_to_json(const Vec3& v);
Vec3 vec_from_json(const nlohmann::json& j);
nlohmann::json view_to_json(const ViewSetup& view);
ViewSetup view_from_json(const nlohmann::json& j);

/// {cloud_id, face_index, position, direction}
nlohmann::json viewpoint_row(const std::string& cloud_id, const ViewSetup& view);

}  // namespace pcqa
