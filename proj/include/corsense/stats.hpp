#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <vector>

namespace corsense {

// Pairwise (tree) reduction.  Summation order depends only on the length of
// the range, never on which thread produced which entry, so aggregates are
// bit-identical for any --jobs value.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 8) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const size_t half = v.size() / 2;
  return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

inline double mean(std::span<const double> v) {
  if (v.empty()) throw std::invalid_argument("mean: empty sample");
  return pairwise_sum(v) / static_cast<double>(v.size());
}

// Upper empirical quantile: the smallest sample value q such that at most
// (1-p)*N samples exceed q.  p in [0, 1].
inline double quantile_upper(std::vector<double> v, double p) {
  if (v.empty()) throw std::invalid_argument("quantile_upper: empty sample");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("quantile_upper: p out of range");
  std::sort(v.begin(), v.end());
  const auto n = static_cast<double>(v.size());
  const auto k = static_cast<size_t>(std::min(n - 1.0, std::max(0.0, std::ceil(p * n) - 1.0)));
  return v[k];
}

// Isotonic (non-decreasing) least-squares fit by pool-adjacent-violators,
// with optional weights.
inline std::vector<double> isotonic_fit(std::span<const double> y,
                                        std::span<const double> w = {}) {
  const size_t n = y.size();
  std::vector<double> level(n), weight(n), out(n);
  std::vector<size_t> len(n);
  size_t blocks = 0;
  for (size_t i = 0; i < n; ++i) {
    level[blocks] = y[i];
    weight[blocks] = w.empty() ? 1.0 : w[i];
    len[blocks] = 1;
    ++blocks;
    while (blocks > 1 && level[blocks - 2] > level[blocks - 1]) {
      const double tw = weight[blocks - 2] + weight[blocks - 1];
      level[blocks - 2] =
          (weight[blocks - 2] * level[blocks - 2] + weight[blocks - 1] * level[blocks - 1]) / tw;
      weight[blocks - 2] = tw;
      len[blocks - 2] += len[blocks - 1];
      --blocks;
    }
  }
  size_t pos = 0;
  for (size_t b = 0; b < blocks; ++b)
    for (size_t j = 0; j < len[b]; ++j) out[pos++] = level[b];
  return out;
}

}  // namespace corsense
