#pragma once

#include <cstddef>
#include <vector>

#include "mmrec/data/types.hpp"

namespace mmrec::data {

struct PreprocessConfig {
  double min_item_share = 0.01;       // of all purchased items
  int min_sentences = 4;
  int min_actions = 3;
  int max_sentences = 541;
  int max_actions = 40;
  Timestamp chain_gap = 14 * kSecondsPerDay;
  int max_events = 10;
  double min_token_share = 0.001;     // of all tag (resp. keyword) occurrences

  void validate() const;
};

struct PreprocessReport {
  std::size_t users_in = 0;
  std::size_t users_out = 0;
  std::size_t dropped_no_events = 0;
  std::size_t dropped_no_items = 0;
  std::vector<ItemId> removed_items;  // ids in the input catalog
  std::size_t passes = 0;
};

/// Runs the cleaning pipeline until nothing changes, so the result is a
/// fixed point: preprocessing it again returns it unchanged.
Dataset preprocess(const Dataset& raw, const PreprocessConfig& cfg = {}, PreprocessReport* report = nullptr);

/// Single steps, exposed for testing.
void collapse_duplicate_actions(WebSession& session);
/// Keeps the events connected to the purchase by gaps of at most `gap`.
void chain_events(UserRecord& user, Timestamp gap);

}  // namespace mmrec::data
