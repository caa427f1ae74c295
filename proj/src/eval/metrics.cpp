#include "mmrec/eval/metrics.hpp"

#include <algorithm>

#include "mmrec/error.hpp"

namespace mmrec::eval {

namespace {

bool contains(std::span<const int> v, int x) { return std::find(v.begin(), v.end(), x) != v.end(); }

std::size_t cutoff(std::span<const int> ranking, int k) {
  if (k < 1) throw ConfigError("cutoff k must be >= 1");
  return std::min(ranking.size(), static_cast<std::size_t>(k));
}

}  // namespace

double hit_rate_at_k(std::span<const int> ranking, std::span<const int> relevant, int k) {
  const std::size_t n = cutoff(ranking, k);
  for (std::size_t i = 0; i < n; ++i)
    if (contains(relevant, ranking[i])) return 1.0;
  return 0.0;
}

double average_precision_at_k(std::span<const int> ranking, std::span<const int> relevant, int k) {
  const std::size_t n = cutoff(ranking, k);
  if (relevant.empty()) return 0.0;
  double sum = 0.0;
  int hits = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (contains(relevant, ranking[i])) {
      ++hits;
      sum += static_cast<double>(hits) / static_cast<double>(i + 1);
    }
  return sum / static_cast<double>(std::min<std::size_t>(relevant.size(), static_cast<std::size_t>(k)));
}

}  // namespace mmrec::eval
