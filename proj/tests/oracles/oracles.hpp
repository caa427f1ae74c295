#pragma once

// Independent re-implementations used as test oracles.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/fisher_f.hpp>

namespace oracle {

/// Scans the top k positions for any relevant item.
inline double hit_rate(const std::vector<int>& ranking, const std::vector<int>& relevant, int k) {
  for (int i = 0; i < k && i < static_cast<int>(ranking.size()); ++i)
    for (int r : relevant)
      if (ranking[static_cast<std::size_t>(i)] == r) return 1.0;
  return 0.0;
}

/// Locates each relevant item's rank, then sums precision at those ranks.
inline double average_precision(const std::vector<int>& ranking, const std::vector<int>& relevant, int k) {
  if (relevant.empty()) return 0.0;
  std::vector<int> ranks;
  for (int r : relevant) {
    const auto it = std::find(ranking.begin(), ranking.end(), r);
    if (it != ranking.end() && it - ranking.begin() < k) ranks.push_back(static_cast<int>(it - ranking.begin()) + 1);
  }
  std::sort(ranks.begin(), ranks.end());
  double sum = 0.0;
  for (std::size_t i = 0; i < ranks.size(); ++i) sum += static_cast<double>(i + 1) / ranks[i];
  return sum / std::min<double>(static_cast<double>(relevant.size()), k);
}

struct Mcnemar {
  double statistic;
  double p_value;
};

inline Mcnemar mcnemar(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  double b01 = 0, b10 = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    b10 += (a[i] == 1 && b[i] == 0);
    b01 += (a[i] == 0 && b[i] == 1);
  }
  if (b01 + b10 == 0) return {0.0, 1.0};
  const double d = std::max(0.0, std::abs(b10 - b01) - 1.0);
  const double x = d * d / (b01 + b10);
  if (x == 0.0) return {0.0, 1.0};
  return {x, boost::math::cdf(boost::math::complement(boost::math::chi_squared(1.0), x))};
}

struct Anova {
  double f;
  double p_value;
};

/// Computational (raw sums of squares) form of the one-way ANOVA.
inline Anova anova(const std::vector<std::vector<double>>& groups) {
  double n = 0, sum = 0, sum_sq = 0, between_raw = 0;
  for (const auto& g : groups) {
    double gs = 0;
    for (double v : g) {
      gs += v;
      sum_sq += v * v;
    }
    n += static_cast<double>(g.size());
    sum += gs;
    between_raw += gs * gs / static_cast<double>(g.size());
  }
  const double ss_total = sum_sq - sum * sum / n;
  const double ss_between = between_raw - sum * sum / n;
  const double ss_within = ss_total - ss_between;
  const double d1 = static_cast<double>(groups.size()) - 1.0, d2 = n - static_cast<double>(groups.size());
  const double f = (ss_between / d1) / (ss_within / d2);
  return {f, boost::math::cdf(boost::math::complement(boost::math::fisher_f(d1, d2), f))};
}

}  // namespace oracle
