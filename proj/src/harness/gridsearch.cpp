#include "mmrec/harness/gridsearch.hpp"

#include <cstdio>

#include "mmrec/error.hpp"
#include "mmrec/log.hpp"
#include "mmrec/parallel.hpp"

namespace mmrec::harness {

using models::ModelKind;

std::vector<ModelKind> tunable_models() {
  std::vector<ModelKind> out;
  for (ModelKind k : models::kAllModels)
    if (models::has_network(k) && k != ModelKind::late_fusion) out.push_back(k);
  return out;
}

double validation_loss(const models::Recommender& model, int* best_epoch) {
  for (const auto& [name, r] : model.info().logs)
    if (name == "model" || name == "student" || name == "joint") {
      if (best_epoch) *best_epoch = r.best_epoch;
      return r.best_valid_loss;
    }
  throw ConfigError(std::string(models::display_name(model.kind())) + " has no trained network");
}

GridResult grid_search(const models::TrainingContext& base, const GridConfig& grid,
                       const std::vector<ModelKind>& kinds, int workers) {
  grid.validate();
  base.validate();
  const std::vector<ModelKind> todo = kinds.empty() ? tunable_models() : kinds;
  GridResult result;
  for (ModelKind kind : todo) {
    if (!models::has_network(kind) || kind == ModelKind::late_fusion)
      throw ConfigError(std::string(models::display_name(kind)) + " has no hyperparameters to search");
    models::TrainingContext ctx = base;
    models::ModelSet teachers;
    if (kind == ModelKind::knowledge_distillation)
      models::train_models(ctx, {ModelKind::conversation, ModelKind::web_session}, teachers);
    if (kind == ModelKind::relative_representation) ctx.encoders = models::with_anchors(ctx);

    std::vector<models::Hyperparameters> cells;
    for (nn::Index b : grid.batch_sizes)
      for (nn::Index u : grid.units)
        for (double d : grid.dropouts) cells.push_back({b, u, d});
    std::vector<GridCell> scored(cells.size());
    parallel_for(cells.size(), workers, [&](std::size_t i) {
      models::TrainingContext c = ctx;
      c.hyper[kind] = cells[i];
      models::ModelSet set = teachers;
      models::train_models(c, {kind}, set);
      scored[i].kind = kind;
      scored[i].hyper = cells[i];
      scored[i].valid_loss = validation_loss(*set.at(kind), &scored[i].best_epoch);
    });
    std::size_t best = 0;
    for (std::size_t i = 1; i < scored.size(); ++i)
      if (scored[i].valid_loss < scored[best].valid_loss) best = i;
    result.best[kind] = scored[best].hyper;
    result.cells.insert(result.cells.end(), scored.begin(), scored.end());
    log_info("grid search: " + std::string(models::display_name(kind)) + " done");
  }
  return result;
}

void write_grid(std::ostream& os, const GridResult& result) {
  os << "model\tbatch_size\tunits\tdropout\tvalid_loss\tbest_epoch\tselected\n";
  char buf[64];
  for (const GridCell& c : result.cells) {
    std::snprintf(buf, sizeof buf, "%.8f", c.valid_loss);
    os << models::slug(c.kind) << '\t' << c.hyper.batch_size << '\t' << c.hyper.units << '\t' << c.hyper.dropout
       << '\t' << buf << '\t' << c.best_epoch << '\t' << (result.best.at(c.kind) == c.hyper ? 1 : 0) << '\n';
  }
}

}  // namespace mmrec::harness
