#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "mmrec/eval/evaluate.hpp"
#include "mmrec/models/zoo.hpp"

namespace mmrec::eval {

/// Keeps each user's `n` most recent events.
std::vector<data::UserRecord> truncate_history(const std::vector<data::UserRecord>& users, int n);

struct EventCountCurve {
  int k = 3;
  std::vector<int> ns;
  std::vector<EvalReport> reports;  // one per n
};

/// Models stay as trained; only the test histories are truncated. Users keep
/// the subset of their full history.
EventCountCurve ablate_event_count(const std::vector<data::UserRecord>& test, const data::ItemCatalog& catalog,
                                   const std::vector<TrainedRuns>& runs, std::vector<int> ns, int k = 3,
                                   std::optional<models::ModelKind> reference = models::ModelKind::latent_feature);

/// Permutes event payloads across each user's timestamp slots, so timestamps
/// stay in order. Seeded per user.
std::vector<data::UserRecord> shuffle_event_order(const std::vector<data::UserRecord>& users, std::uint64_t seed);

struct OrderAblationConfig {
  std::vector<models::ModelKind> kinds;
  std::vector<std::uint64_t> seeds;  // training seed of shuffle r is seeds[r % size]
  int shuffles = 5;
  std::uint64_t shuffle_seed = 7;
  int k = 3;
  int workers = 1;

  void validate() const;
};

struct OrderAblationRow {
  models::ModelKind kind = models::ModelKind::latent_feature;
  Subset subset = Subset::union_all;
  Metric metric = Metric::map;
  std::optional<double> original;
  std::optional<double> shuffled;
  std::optional<double> relative_change;  // (shuffled - original) / original
};

struct OrderAblation {
  int k = 3;
  int shuffles = 0;
  std::vector<OrderAblationRow> rows;
  EvalReport shuffled;  // one "seed" per shuffle
};

/// Shuffles train, validation and test histories, retrains every requested
/// kind once per shuffle and compares with `original`.
OrderAblation ablate_event_order(const models::TrainingContext& base, const std::vector<data::UserRecord>& test,
                                 const data::ItemCatalog& catalog, const EvalReport& original,
                                 const OrderAblationConfig& cfg);

}  // namespace mmrec::eval
