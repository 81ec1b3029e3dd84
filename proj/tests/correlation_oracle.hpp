#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <vector>

#include "pcqa/eval.hpp"

namespace pcqa::testing {

/// Brute-force correlations over integer series, computed with exact
/// integer sums. nullopt marks a degenerate series.
inline std::optional<double> oracle_pearson(const std::vector<long long>& x, const std::vector<long long>& y) {
  const long long n = static_cast<long long>(x.size());
  long long sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  const long long cxx = n * sxx - sx * sx, cyy = n * syy - sy * sy, cxy = n * sxy - sx * sy;
  if (cxx == 0 || cyy == 0) return std::nullopt;
  return std::clamp(static_cast<double>(cxy) / std::sqrt(static_cast<double>(cxx) * static_cast<double>(cyy)), -1.0,
                    1.0);
}

/// Twice the average rank: 2 * (number below) + (number equal) + 1.
inline std::vector<long long> oracle_doubled_ranks(const std::vector<long long>& x) {
  std::vector<long long> r(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    long long below = 0, equal = 0;
    for (long long v : x) {
      below += v < x[i];
      equal += v == x[i];
    }
    r[i] = 2 * below + equal + 1;
  }
  return r;
}

inline std::optional<double> oracle_spearman(const std::vector<long long>& x, const std::vector<long long>& y) {
  return oracle_pearson(oracle_doubled_ranks(x), oracle_doubled_ranks(y));
}

/// Pairs of equal values within one series.
inline long long oracle_tied_pairs(const std::vector<long long>& v) {
  long long t = 0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    for (std::size_t j = i + 1; j < v.size(); ++j) t += v[i] == v[j];
  }
  return t;
}

inline std::optional<double> oracle_kendall_with_ties(const std::vector<long long>& x, const std::vector<long long>& y,
                                                      long long tied_x, long long tied_y) {
  const long long n = static_cast<long long>(x.size());
  const long long n0 = n * (n - 1) / 2;
  long long s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const long long dx = (x[i] > x[j]) - (x[i] < x[j]);
      const long long dy = (y[i] > y[j]) - (y[i] < y[j]);
      s += dx * dy;
    }
  }
  const long long ax = n0 - tied_x, ay = n0 - tied_y;
  if (ax == 0 || ay == 0) return std::nullopt;
  return std::clamp(static_cast<double>(s) / std::sqrt(static_cast<double>(ax) * static_cast<double>(ay)), -1.0, 1.0);
}

inline std::optional<double> oracle_kendall(const std::vector<long long>& x, const std::vector<long long>& y) {
  return oracle_kendall_with_ties(x, y, oracle_tied_pairs(x), oracle_tied_pairs(y));
}

struct ExhaustiveResult {
  long long pairs = 0;
  long long mismatches = 0;
};

/// Every pair of series of length 3..max_n over {1, 2, 3}; a metric matches
/// when it is bit-identical to the oracle or both report degeneracy.
inline ExhaustiveResult exhaustive_correlation_check(int max_n) {
  ExhaustiveResult r;
  for (int n = 3; n <= max_n; ++n) {
    long long count = 1;
    for (int k = 0; k < n; ++k) count *= 3;
    std::vector<std::vector<long long>> ints(count, std::vector<long long>(n));
    std::vector<std::vector<double>> reals(count, std::vector<double>(n));
    std::vector<std::vector<long long>> ranks(count);
    std::vector<long long> ties(count);
    for (long long c = 0; c < count; ++c) {
      long long code = c;
      for (int k = 0; k < n; ++k) {
        ints[c][k] = 1 + code % 3;
        reals[c][k] = static_cast<double>(ints[c][k]);
        code /= 3;
      }
      ranks[c] = oracle_doubled_ranks(ints[c]);
      ties[c] = oracle_tied_pairs(ints[c]);
    }
    auto same = [](auto metric, const std::vector<double>& a, const std::vector<double>& b,
                   const std::optional<double>& want) {
      try {
        const double got = metric(a, b);
        return want.has_value() && got == *want;
      } catch (const Error&) {
        return !want.has_value();
      }
    };
    for (long long a = 0; a < count; ++a) {
      for (long long b = 0; b < count; ++b) {
        ++r.pairs;
        const auto& x = reals[a];
        const auto& y = reals[b];
        const bool ok = same([](const auto& p, const auto& q) { return plcc(p, q); }, x, y,
                             oracle_pearson(ints[a], ints[b])) &&
                        same([](const auto& p, const auto& q) { return srcc(p, q); }, x, y,
                             oracle_pearson(ranks[a], ranks[b])) &&
                        same([](const auto& p, const auto& q) { return krcc(p, q); }, x, y,
                             oracle_kendall_with_ties(ints[a], ints[b], ties[a], ties[b]));
        r.mismatches += !ok;
      }
    }
  }
  return r;
}

}  // namespace pcqa::testing
