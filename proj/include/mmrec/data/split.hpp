#pragma once

#include <vector>

#include "mmrec/data/types.hpp"

namespace mmrec::data {

struct Split {
  std::vector<UserRecord> train;
  std::vector<UserRecord> valid;
  std::vector<UserRecord> test;
};

/// Records are ordered by purchase time (ties keep input order). The latest
/// floor(test_frac * n) go to test; of the rest, the latest
/// floor(valid_frac * rest) go to validation.
Split chronological_split(const std::vector<UserRecord>& records, double test_frac = 0.1,
                          double valid_frac = 0.1);

}  // namespace mmrec::data
