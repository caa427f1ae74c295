#pragma once

#include <optional>
#include <span>
#include <vector>

#include "mmrec/data/types.hpp"

namespace mmrec::models {

inline constexpr double kPostFilterDelta = 1e-6;

/// A coverage is eligible when its base product is owned. Unknown ownership
/// makes every item eligible.
bool eligible(data::ItemId item, const std::optional<std::vector<data::ItemId>>& owned,
              const data::ItemCatalog& catalog);

/// Each ineligible coverage, in item-id order k = 1, 2, ..., gets
/// min(scores) - k * delta, so filtered items rank last in id order.
std::vector<double> post_filter(std::span<const double> scores,
                                const std::optional<std::vector<data::ItemId>>& owned,
                                const data::ItemCatalog& catalog);

/// Item ids by decreasing score; equal scores keep id order.
std::vector<int> rank_items(std::span<const double> scores);

}  // namespace mmrec::models
