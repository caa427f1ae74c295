#pragma once

#include <span>
#include <vector>

namespace mmrec::eval {

/// 1 when any of the first k ranked items is relevant, else 0.
double hit_rate_at_k(std::span<const int> ranking, std::span<const int> relevant, int k);

/// (1 / min(|relevant|, k)) * sum over the top k of precision@i * rel(i).
/// 0 when nothing is relevant.
double average_precision_at_k(std::span<const int> ranking, std::span<const int> relevant, int k);

}  // namespace mmrec::eval
