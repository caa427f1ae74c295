#include "mmrec/models/post_filter.hpp"

#include <algorithm>
#include <numeric>

#include "mmrec/error.hpp"

namespace mmrec::models {

bool eligible(data::ItemId item, const std::optional<std::vector<data::ItemId>>& owned,
              const data::ItemCatalog& catalog) {
  const data::CatalogItem& c = catalog.items.at(static_cast<std::size_t>(item));
  if (c.kind == data::ItemKind::base_product || !owned) return true;
  return std::find(owned->begin(), owned->end(), *c.base_of) != owned->end();
}

std::vector<double> post_filter(std::span<const double> scores,
                                const std::optional<std::vector<data::ItemId>>& owned,
                                const data::ItemCatalog& catalog) {
  if (static_cast<int>(scores.size()) != catalog.size())
    throw DataError("score vector length " + std::to_string(scores.size()) + " does not match the catalog");
  std::vector<double> out(scores.begin(), scores.end());
  if (out.empty()) return out;
  const double floor = *std::min_element(scores.begin(), scores.end());
  int k = 0;
  for (int j = 0; j < catalog.size(); ++j)
    if (!eligible(j, owned, catalog)) out[static_cast<std::size_t>(j)] = floor - kPostFilterDelta * ++k;
  return out;
}

std::vector<int> rank_items(std::span<const double> scores) {
  std::vector<int> order(scores.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  return order;
}

}  // namespace mmrec::models
