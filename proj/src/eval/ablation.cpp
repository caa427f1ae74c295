#include "mmrec/eval/ablation.hpp"

#include <algorithm>
#include <random>

#include "mmrec/error.hpp"
#include "mmrec/log.hpp"
#include "mmrec/parallel.hpp"
#include "mmrec/random.hpp"

namespace mmrec::eval {

std::vector<data::UserRecord> truncate_history(const std::vector<data::UserRecord>& users, int n) {
  if (n < 1) throw ConfigError("event count must be at least 1");
  std::vector<data::UserRecord> out = users;
  for (data::UserRecord& u : out)
    if (static_cast<int>(u.events.size()) > n) u.events.erase(u.events.begin(), u.events.end() - n);
  return out;
}

EventCountCurve ablate_event_count(const std::vector<data::UserRecord>& test, const data::ItemCatalog& catalog,
                                   const std::vector<TrainedRuns>& runs, std::vector<int> ns, int k,
                                   std::optional<models::ModelKind> reference) {
  if (ns.empty()) throw ConfigError("no event counts to evaluate");
  std::sort(ns.begin(), ns.end());
  ns.erase(std::unique(ns.begin(), ns.end()), ns.end());
  const EvalTarget target = EvalTarget::from_users(test, catalog);
  EventCountCurve curve;
  curve.k = k;
  curve.ns = ns;
  for (int n : ns) {
    const std::vector<data::UserRecord> cut = truncate_history(test, n);
    std::vector<ModelRuns> preds;
    for (const TrainedRuns& r : runs) preds.push_back(predict_runs(r, cut));
    curve.reports.push_back(evaluate(target, preds, {k}, reference));
    log_info("event-count ablation: n=" + std::to_string(n) + " done");
  }
  return curve;
}

std::vector<data::UserRecord> shuffle_event_order(const std::vector<data::UserRecord>& users, std::uint64_t seed) {
  std::vector<data::UserRecord> out = users;
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::vector<data::Event>& events = out[i].events;
    if (events.size() < 2) continue;
    std::mt19937_64 rng(splitmix(seed * 0x100000001b3ULL + i));
    std::vector<data::Timestamp> slots;
    for (const data::Event& e : events) slots.push_back(e.time());
    for (std::size_t j = events.size() - 1; j > 0; --j) std::swap(events[j], events[rng() % (j + 1)]);
    for (std::size_t j = 0; j < events.size(); ++j) events[j].set_time(slots[j]);
  }
  return out;
}

void OrderAblationConfig::validate() const {
  if (kinds.empty()) throw ConfigError("order ablation needs at least one model kind");
  if (seeds.empty()) throw ConfigError("order ablation needs at least one seed");
  if (shuffles < 1) throw ConfigError("order ablation needs at least one shuffle");
  if (k < 1) throw ConfigError("cutoff must be at least 1");
  if (workers < 1) throw ConfigError("worker count must be at least 1");
}

OrderAblation ablate_event_order(const models::TrainingContext& base, const std::vector<data::UserRecord>& test,
                                 const data::ItemCatalog& catalog, const EvalReport& original,
                                 const OrderAblationConfig& cfg) {
  cfg.validate();
  base.validate();
  const auto n = static_cast<std::size_t>(cfg.shuffles);
  std::vector<std::vector<std::vector<models::Prediction>>> preds(n);  // [shuffle][kind]
  std::vector<std::uint64_t> seeds(n);

  parallel_for(n, cfg.workers, [&](std::size_t r) {
    const std::uint64_t s = splitmix(cfg.shuffle_seed + r);
    const auto train = shuffle_event_order(*base.train, splitmix(s ^ 1));
    const auto valid = shuffle_event_order(*base.valid, splitmix(s ^ 2));
    const auto shuffled_test = shuffle_event_order(test, splitmix(s ^ 3));
    models::TrainingContext ctx = base;
    ctx.train = &train;
    ctx.valid = &valid;
    ctx.seed = cfg.seeds[r % cfg.seeds.size()];
    seeds[r] = ctx.seed;
    models::ModelSet set;
    models::train_models(ctx, cfg.kinds, set);
    for (models::ModelKind kind : cfg.kinds) preds[r].push_back(set.at(kind)->predict(shuffled_test));
    log_info("order ablation: shuffle " + std::to_string(r + 1) + " of " + std::to_string(n) + " done");
  });

  const EvalTarget target = EvalTarget::from_users(test, catalog);
  std::vector<ModelRuns> runs;
  for (std::size_t ki = 0; ki < cfg.kinds.size(); ++ki) {
    ModelRuns mr;
    mr.kind = cfg.kinds[ki];
    mr.seeds = seeds;
    for (std::size_t r = 0; r < n; ++r) mr.predictions.push_back(preds[r][ki]);
    runs.push_back(std::move(mr));
  }
  OrderAblation out;
  out.k = cfg.k;
  out.shuffles = cfg.shuffles;
  out.shuffled = evaluate(target, runs, {cfg.k}, std::nullopt);
  for (models::ModelKind kind : cfg.kinds) {
    const ModelResult* before = original.find(kind);
    for (Subset s : kSubsets) {
      for (Metric m : kMetrics) {
        OrderAblationRow row;
        row.kind = kind;
        row.subset = s;
        row.metric = m;
        if (before) row.original = before->cell(s, m, cfg.k).mean;
        row.shuffled = out.shuffled.at(kind).cell(s, m, cfg.k).mean;
        if (row.original && row.shuffled && *row.original != 0.0)
          row.relative_change = (*row.shuffled - *row.original) / *row.original;
        out.rows.push_back(row);
      }
    }
  }
  return out;
}

}  // namespace mmrec::eval
