#pragma once

#include <cstdint>

#include "pcqa/cloud.hpp"

namespace pcqa {

/// Procedural colored surface clouds for tests and desk-scale runs. `shape`
/// cycles through 8 textured surfaces (sphere, torus, box, bumpy ellipsoid,
/// cylinder, saddle, two spheres, helix tube).
PointCloud make_synthetic_cloud(int shape, std::size_t points, std::uint64_t seed);

}  // namespace pcqa
