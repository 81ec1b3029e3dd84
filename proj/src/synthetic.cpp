#include "pcqa/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace pcqa {
namespace {

constexpr double kPi = std::numbers::pi;

Rgb shade(double r, double g, double b) {
  auto ch = [](double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v * 255.0), 0L, 255L)); };
  return {ch(r), ch(g), ch(b)};
}

// Smooth texture with a few sharp edges, parameterized by surface coordinates.
Rgb texture(int shape, double s, double t) {
  const double stripes = 0.5 + 0.5 * std::sin(6.0 * s + 2.0 * shape);
  const double checker = (static_cast<int>(std::floor(4.0 * s) + std::floor(4.0 * t)) & 1) ? 0.85 : 0.25;
  const double grad = 0.5 + 0.5 * std::cos(3.0 * t + shape);
  switch (shape % 4) {
    case 0:
      return shade(stripes, 0.3 + 0.4 * grad, 0.6 * checker);
    case 1:
      return shade(checker, grad, 0.4 + 0.3 * stripes);
    case 2:
      return shade(0.2 + 0.6 * grad, 0.5 * stripes + 0.2, checker);
    default:
      return shade(0.7 * checker + 0.2 * stripes, 0.8 * grad, 0.3);
  }
}

}  // namespace

PointCloud make_synthetic_cloud(int shape, std::size_t points, std::uint64_t seed) {
  if (points == 0) throw Error("empty cloud");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  PointCloud cloud;
  cloud.id = "synth" + std::to_string(shape);
  cloud.points.reserve(points);
  cloud.colors.reserve(points);
  const int kind = ((shape % 8) + 8) % 8;
  for (std::size_t i = 0; i < points; ++i) {
    const double a = unit(rng);
    const double b = unit(rng);
    const double theta = 2.0 * kPi * a;
    Vec3 p;
    double s = a, t = b;
    switch (kind) {
      case 0: {  // sphere
        const double z = 2.0 * b - 1.0;
        const double r = std::sqrt(1.0 - z * z);
        p = {r * std::cos(theta), r * std::sin(theta), z};
        break;
      }
      case 1: {  // torus
        const double phi = 2.0 * kPi * b;
        p = {(1.0 + 0.4 * std::cos(phi)) * std::cos(theta), (1.0 + 0.4 * std::cos(phi)) * std::sin(theta),
             0.4 * std::sin(phi)};
        break;
      }
      case 2: {  // box surface
        const int face = static_cast<int>(unit(rng) * 6.0) % 6;
        const double x = 2.0 * a - 1.0, y = 2.0 * b - 1.0;
        const double sign = (face & 1) ? -1.0 : 1.0;
        if (face < 2) p = {sign, x, 0.6 * y};
        else if (face < 4) p = {x, sign, 0.6 * y};
        else p = {x, y, 0.6 * sign};
        s = 0.5 * (x + 1.0) + face;
        break;
      }
      case 3: {  // bumpy ellipsoid
        const double z = 2.0 * b - 1.0;
        const double r = std::sqrt(1.0 - z * z);
        const double bump = 1.0 + 0.12 * std::sin(5.0 * theta) * std::sin(4.0 * kPi * b);
        p = {1.3 * bump * r * std::cos(theta), 0.8 * bump * r * std::sin(theta), 0.9 * bump * z};
        break;
      }
      case 4: {  // open cylinder
        p = {0.7 * std::cos(theta), 0.7 * std::sin(theta), 2.0 * b - 1.0};
        break;
      }
      case 5: {  // saddle patch
        const double x = 2.0 * a - 1.0, y = 2.0 * b - 1.0;
        p = {x, y, 0.6 * (x * x - y * y)};
        break;
      }
      case 6: {  // two spheres
        const double z = 2.0 * b - 1.0;
        const double r = std::sqrt(1.0 - z * z);
        const bool second = unit(rng) < 0.4;
        const double radius = second ? 0.5 : 0.8;
        p = Vec3(radius * r * std::cos(theta), radius * r * std::sin(theta), radius * z) +
            (second ? Vec3(1.1, 0.3, 0.2) : Vec3::Zero());
        break;
      }
      default: {  // helix tube
        const double phi = 2.0 * kPi * b;
        const double along = 4.0 * kPi * a;
        const Vec3 axis(0.8 * std::cos(along), 0.8 * std::sin(along), 0.25 * along - 1.5);
        const Vec3 radial(std::cos(along) * std::cos(phi), std::sin(along) * std::cos(phi), std::sin(phi));
        p = axis + 0.3 * radial;
        s = 2.0 * a;
        break;
      }
    }
    cloud.points.push_back(p);
    cloud.colors.push_back(texture(shape, s * 2.0, t * 2.0));
  }
  return cloud;
}

}  // namespace pcqa
