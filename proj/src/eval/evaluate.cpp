#include "mmrec/eval/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mmrec/error.hpp"
#include "mmrec/eval/metrics.hpp"
#include "mmrec/models/post_filter.hpp"

namespace mmrec::eval {

std::string_view to_string(Subset s) noexcept {
  switch (s) {
    case Subset::union_all: return "union";
    case Subset::conversations_only: return "conversations-only";
    case Subset::sessions_only: return "web-sessions-only";
    case Subset::intersection: return "intersection";
  }
  return "union";
}

bool contains(Subset s, data::UserSubset user) noexcept {
  switch (s) {
    case Subset::union_all: return true;
    case Subset::conversations_only: return user == data::UserSubset::conversations_only;
    case Subset::sessions_only: return user == data::UserSubset::sessions_only;
    case Subset::intersection: return user == data::UserSubset::intersection;
  }
  return false;
}

std::string_view to_string(Metric m) noexcept { return m == Metric::hit_rate ? "HR" : "MAP"; }

EvalTarget EvalTarget::from_users(const std::vector<data::UserRecord>& users, const data::ItemCatalog& catalog) {
  EvalTarget t;
  t.catalog = &catalog;
  for (const data::UserRecord& u : users) {
    if (u.purchase.items.empty()) throw DataError("test user " + u.id + " has no purchased items");
    t.relevant.push_back(u.purchase.items);
    t.owned.push_back(u.owned);
    t.subsets.push_back(data::subset_of(u));
  }
  return t;
}

std::size_t EvalTarget::count(Subset s) const {
  return static_cast<std::size_t>(
      std::count_if(subsets.begin(), subsets.end(), [&](data::UserSubset u) { return contains(s, u); }));
}

std::size_t UserScores::k_index(int k) const {
  const auto it = std::find(ks.begin(), ks.end(), k);
  if (it == ks.end()) throw ConfigError("cutoff k=" + std::to_string(k) + " was not evaluated");
  return static_cast<std::size_t>(it - ks.begin());
}

std::optional<double> UserScores::mean(Subset s, Metric m, int k, const EvalTarget& target) const {
  const std::size_t ki = k_index(k);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < scored.size(); ++i) {
    if (!scored[i] || !contains(s, target.subsets[i])) continue;
    sum += m == Metric::hit_rate ? static_cast<double>(hits[ki][i]) : ap[ki][i];
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

std::size_t UserScores::scored_count(Subset s, const EvalTarget& target) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < scored.size(); ++i)
    if (scored[i] && contains(s, target.subsets[i])) ++n;
  return n;
}

UserScores score_users(const EvalTarget& target, const std::vector<models::Prediction>& predictions,
                       std::span<const int> ks) {
  if (predictions.size() != target.size())
    throw DataError("got " + std::to_string(predictions.size()) + " predictions for " +
                    std::to_string(target.size()) + " test users");
  if (ks.empty()) throw ConfigError("no cutoffs to evaluate");
  for (int k : ks)
    if (k < 1) throw ConfigError("cutoffs must be at least 1");
  UserScores s;
  s.ks.assign(ks.begin(), ks.end());
  s.scored.assign(target.size(), 0);
  s.hits.assign(ks.size(), std::vector<std::uint8_t>(target.size(), 0));
  s.ap.assign(ks.size(), std::vector<double>(target.size(), 0.0));
  for (std::size_t i = 0; i < target.size(); ++i) {
    if (!predictions[i]) continue;
    s.scored[i] = 1;
    const std::vector<int> ranking =
        models::rank_items(models::post_filter(*predictions[i], target.owned[i], *target.catalog));
    for (std::size_t ki = 0; ki < ks.size(); ++ki) {
      s.hits[ki][i] = static_cast<std::uint8_t>(hit_rate_at_k(ranking, target.relevant[i], ks[ki]));
      s.ap[ki][i] = average_precision_at_k(ranking, target.relevant[i], ks[ki]);
    }
  }
  return s;
}

const Cell& ModelResult::cell(Subset s, Metric m, int k) const {
  const auto it = cells.find({s, m, k});
  if (it == cells.end()) throw ConfigError("no result for cutoff k=" + std::to_string(k));
  return it->second;
}

const ModelResult* EvalReport::find(models::ModelKind kind) const {
  for (const ModelResult& m : models)
    if (m.kind == kind) return &m;
  return nullptr;
}

const ModelResult& EvalReport::at(models::ModelKind kind) const {
  if (const ModelResult* m = find(kind)) return *m;
  throw ConfigError("no evaluation results for " + std::string(models::display_name(kind)));
}

namespace {

std::optional<TestResult> compare(const ModelResult& model, const ModelResult& ref, Subset s, Metric m, int k,
                                  const EvalTarget& target) {
  const std::size_t seeds = std::min(model.per_seed.size(), ref.per_seed.size());
  if (m == Metric::hit_rate) {
    std::vector<std::uint8_t> a, b;
    for (std::size_t r = 0; r < seeds; ++r) {
      const UserScores& x = model.per_seed[r];
      const UserScores& y = ref.per_seed[r];
      const std::size_t kx = x.k_index(k), ky = y.k_index(k);
      for (std::size_t i = 0; i < target.size(); ++i) {
        if (!x.scored[i] || !y.scored[i] || !contains(s, target.subsets[i])) continue;
        a.push_back(x.hits[kx][i]);
        b.push_back(y.hits[ky][i]);
      }
    }
    if (a.empty()) return std::nullopt;
    return mcnemar(a, b);
  }
  std::vector<std::vector<double>> groups(2);
  for (std::size_t r = 0; r < model.per_seed.size(); ++r)
    if (auto v = model.per_seed[r].mean(s, m, k, target)) groups[0].push_back(*v);
  for (std::size_t r = 0; r < ref.per_seed.size(); ++r)
    if (auto v = ref.per_seed[r].mean(s, m, k, target)) groups[1].push_back(*v);
  if (groups[0].size() < 2 || groups[1].size() < 2) return std::nullopt;
  return anova_oneway(groups);
}

}  // namespace

EvalReport evaluate(const EvalTarget& target, const std::vector<ModelRuns>& runs, std::vector<int> ks,
                    std::optional<models::ModelKind> reference, double alpha) {
  if (target.catalog == nullptr) throw ConfigError("evaluation target has no catalog");
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
  EvalReport report;
  report.ks = ks;
  for (std::size_t si = 0; si < kSubsets.size(); ++si) report.subset_users[si] = target.count(kSubsets[si]);

  for (const ModelRuns& run : runs) {
    if (run.predictions.empty()) throw ConfigError("no runs for " + std::string(models::display_name(run.kind)));
    if (run.seeds.size() != run.predictions.size()) throw ConfigError("seed list does not match the runs");
    if (report.find(run.kind)) throw ConfigError("duplicate runs for " + std::string(models::display_name(run.kind)));
    ModelResult result;
    result.kind = run.kind;
    result.seeds = run.seeds;
    for (const auto& p : run.predictions) result.per_seed.push_back(score_users(target, p, ks));
    for (Subset s : kSubsets) {
      for (Metric m : kMetrics) {
        for (int k : ks) {
          Cell cell;
          cell.users = result.per_seed.front().scored_count(s, target);
          std::vector<double> values;
          for (const UserScores& u : result.per_seed)
            if (auto v = u.mean(s, m, k, target)) values.push_back(*v);
          if (!values.empty()) {
            double sum = 0.0;
            for (double v : values) sum += v;
            const double mean = sum / static_cast<double>(values.size());
            double ss = 0.0;
            for (double v : values) ss += (v - mean) * (v - mean);
            cell.mean = mean;
            cell.std = values.size() > 1 ? std::sqrt(ss / static_cast<double>(values.size() - 1)) : 0.0;
          }
          result.cells.emplace(CellKey{s, m, k}, cell);
        }
      }
    }
    report.models.push_back(std::move(result));
  }

  if (reference) {
    report.reference = reference;
    if (const ModelResult* ref = report.find(*reference)) {
      for (ModelResult& model : report.models) {
        if (model.kind == *reference) continue;
        for (auto& [key, cell] : model.cells) {
          const auto& [s, m, k] = key;
          cell.test = compare(model, *ref, s, m, k, target);
          cell.significant = cell.test && cell.test->p_value < alpha;
        }
      }
    }
  }
  return report;
}

ModelRuns predict_runs(const TrainedRuns& runs, const std::vector<data::UserRecord>& users) {
  if (runs.seeds.size() != runs.models.size()) throw ConfigError("seed list does not match the trained models");
  ModelRuns out;
  out.kind = runs.kind;
  out.seeds = runs.seeds;
  for (const auto& m : runs.models) out.predictions.push_back(m->predict(users));
  return out;
}

}  // namespace mmrec::eval
