#include "mmrec/data/split.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "mmrec/error.hpp"

namespace mmrec::data {

namespace {

std::size_t tail_size(std::size_t n, double frac) {
  return static_cast<std::size_t>(std::floor(frac * static_cast<double>(n) + 1e-9));
}

}  // namespace

Split chronological_split(const std::vector<UserRecord>& records, double test_frac, double valid_frac) {
  if (!(test_frac > 0.0 && test_frac < 1.0)) throw ConfigError("test fraction must be in (0, 1)");
  if (!(valid_frac > 0.0 && valid_frac < 1.0)) throw ConfigError("validation fraction must be in (0, 1)");
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return records[a].purchase.time < records[b].purchase.time;
  });
  const std::size_t n = records.size();
  const std::size_t n_test = tail_size(n, test_frac);
  const std::size_t rest = n - n_test;
  const std::size_t n_valid = tail_size(rest, valid_frac);
  const std::size_t n_train = rest - n_valid;
  if (n_test == 0 || n_valid == 0 || n_train == 0)
    throw ConfigError("too few records (" + std::to_string(n) + ") to populate train, validation and test");
  Split s;
  for (std::size_t i = 0; i < n; ++i) {
    const UserRecord& r = records[order[i]];
    if (i < n_train) s.train.push_back(r);
    else if (i < rest) s.valid.push_back(r);
    else s.test.push_back(r);
  }
  return s;
}

}  // namespace mmrec::data
