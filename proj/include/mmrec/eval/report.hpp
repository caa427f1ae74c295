#pragma once

#include <ostream>

#include "mmrec/eval/ablation.hpp"
#include "mmrec/eval/evaluate.hpp"

namespace mmrec::eval {

/// Models as rows; subsets x {HR@k, MAP@k} as columns. "-" marks an absent
/// value, "*" a significant difference from the reference model.
void write_table(std::ostream& os, const EvalReport& report, int k = 3);

/// One row per model, subset, metric and cutoff with mean, std and test.
void write_long(std::ostream& os, const EvalReport& report);

/// Metric against cutoff: one row per model, subset and metric.
void write_curves(std::ostream& os, const EvalReport& report);

/// Metrics against the number of most recent events kept.
void write_event_curve(std::ostream& os, const EventCountCurve& curve);

/// Relative change after shuffling, models x metrics as rows, subsets as columns.
void write_order_table(std::ostream& os, const OrderAblation& ablation);

/// Original and shuffled means behind the relative changes.
void write_order_long(std::ostream& os, const OrderAblation& ablation);

}  // namespace mmrec::eval
