#include "pcqa/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace pcqa {
namespace {

// One-dimensional difference along a row or column, honoring coverage.
double difference(double prev, double here, double next, bool has_prev, bool has_next) {
  if (has_prev && has_next) return 0.5 * (next - prev);
  if (has_next) return next - here;
  if (has_prev) return here - prev;
  return 0.0;
}

}  // namespace

ImageFeatures extract_features(const ProjectedImage& img) {
  const int w = img.width;
  const int h = img.height;
  const std::size_t n_pix = img.pixel_count();
  std::size_t covered = 0;
  for (std::uint8_t m : img.mask) covered += m;
  if (covered == 0) throw Error("empty projection");

  // Channel planes and luminance in [0, 1].
  std::array<std::vector<double>, 4> plane;
  for (auto& p : plane) p.assign(n_pix, 0.0);
  for (std::size_t i = 0; i < n_pix; ++i) {
    if (!img.mask[i]) continue;
    for (int c = 0; c < 3; ++c) plane[c][i] = img.color[3 * i + c] / 255.0;
    plane[3][i] = 0.299 * plane[0][i] + 0.587 * plane[1][i] + 0.114 * plane[2][i];
  }

  const double count = static_cast<double>(covered);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(kFeatureDim);

  std::array<std::vector<double>, 3> grad_mag;
  for (auto& g : grad_mag) g.reserve(covered);
  std::array<double, kOrientationBins> hist{};
  double hist_total = 0.0;
  std::vector<double> depths;
  depths.reserve(covered);

  auto covered_at = [&](int r, int c) {
    return r >= 0 && c >= 0 && r < h && c < w && img.mask[img.index(r, c)] != 0;
  };

  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const std::size_t i = img.index(r, c);
      if (!img.mask[i]) continue;
      depths.push_back(img.depth[i]);
      const bool left = covered_at(r, c - 1), right = covered_at(r, c + 1);
      const bool down = covered_at(r - 1, c), up = covered_at(r + 1, c);
      const std::size_t il = left ? i - 1 : i, ir = right ? i + 1 : i;
      const std::size_t id = down ? i - w : i, iu = up ? i + w : i;
      for (int ch = 0; ch < 4; ++ch) {
        const auto& p = plane[ch];
        const double gx = difference(p[il], p[i], p[ir], left, right);
        const double gy = difference(p[id], p[i], p[iu], down, up);
        const double mag = std::hypot(gx, gy);
        if (ch < 3) {
          grad_mag[ch].push_back(mag);
        } else if (mag > 0.0) {
          const double theta = std::atan2(gy, gx);
          int bin = static_cast<int>(std::floor((theta + std::numbers::pi) / (2.0 * std::numbers::pi) *
                                                kOrientationBins));
          bin = std::clamp(bin, 0, kOrientationBins - 1);
          hist[bin] += mag;
          hist_total += mag;
        }
      }
    }
  }

  // Moments of deviations from the first sample, so constant inputs give an
  // exact zero spread.
  auto mean_std = [](const std::vector<double>& xs) {
    const double x0 = xs.front();
    double s = 0.0;
    for (double x : xs) s += x - x0;
    const double shift = s / xs.size();
    double ss = 0.0;
    for (double x : xs) ss += (x - x0 - shift) * (x - x0 - shift);
    return std::pair{x0 + shift, std::sqrt(ss / xs.size())};
  };

  for (int ch = 0; ch < 3; ++ch) {
    std::vector<double> vals;
    vals.reserve(covered);
    for (std::size_t i = 0; i < n_pix; ++i) {
      if (img.mask[i]) vals.push_back(plane[ch][i]);
    }
    const auto [m, s] = mean_std(vals);
    f[ch] = m;
    f[3 + ch] = s;
    const auto [gm, gs] = mean_std(grad_mag[ch]);
    f[6 + ch] = gm;
    f[9 + ch] = gs;
  }

  const double scale = img.view.region_half_extent > 0.0 ? img.view.region_half_extent : 1.0;
  const auto [dm, ds] = mean_std(depths);
  const auto [dmin, dmax] = std::minmax_element(depths.begin(), depths.end());
  f[12] = dm / scale;
  f[13] = ds / scale;
  f[14] = (*dmax - *dmin) / scale;
  f[15] = count / static_cast<double>(n_pix);
  if (hist_total > 0.0) {
    for (int b = 0; b < kOrientationBins; ++b) f[16 + b] = hist[b] / hist_total;
  }
  return ImageFeatures{std::move(f)};
}

}  // namespace pcqa
