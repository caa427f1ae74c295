#pragma once

#include <map>
#include <ostream>
#include <vector>

#include "mmrec/harness/config.hpp"
#include "mmrec/models/zoo.hpp"

namespace mmrec::harness {

struct GridCell {
  models::ModelKind kind = models::ModelKind::conversation;
  models::Hyperparameters hyper;
  double valid_loss = 0.0;
  int best_epoch = 0;
};

struct GridResult {
  std::vector<GridCell> cells;  // per kind, in grid order
  std::map<models::ModelKind, models::Hyperparameters> best;
};

/// Models whose hyperparameters the grid can tune.
std::vector<models::ModelKind> tunable_models();

/// Best validation loss of a trained model's own network.
double validation_loss(const models::Recommender& model, int* best_epoch = nullptr);

/// Exhaustive search over batch size x units x dropout per kind. Teachers
/// (for distillation) and anchors (for relative representations) are fitted
/// once with the context's settings. Ties go to the earlier cell.
GridResult grid_search(const models::TrainingContext& base, const GridConfig& grid,
                       const std::vector<models::ModelKind>& kinds, int workers);

void write_grid(std::ostream& os, const GridResult& result);

}  // namespace mmrec::harness
