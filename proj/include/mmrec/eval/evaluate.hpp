#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string_view>
#include <tuple>
#include <vector>

#include "mmrec/data/types.hpp"
#include "mmrec/eval/stats.hpp"
#include "mmrec/models/recommender.hpp"

namespace mmrec::eval {

enum class Subset : std::uint8_t { union_all, conversations_only, sessions_only, intersection };
inline constexpr std::array<Subset, 4> kSubsets = {Subset::union_all, Subset::conversations_only,
                                                   Subset::sessions_only, Subset::intersection};

std::string_view to_string(Subset s) noexcept;
bool contains(Subset s, data::UserSubset user) noexcept;

enum class Metric : std::uint8_t { hit_rate, map };
inline constexpr std::array<Metric, 2> kMetrics = {Metric::hit_rate, Metric::map};
std::string_view to_string(Metric m) noexcept;

inline constexpr double kSignificanceLevel = 0.05;

/// Labels, ownership and subset membership of the test users.
struct EvalTarget {
  const data::ItemCatalog* catalog = nullptr;
  std::vector<std::vector<int>> relevant;
  std::vector<std::optional<std::vector<data::ItemId>>> owned;
  std::vector<data::UserSubset> subsets;

  static EvalTarget from_users(const std::vector<data::UserRecord>& users, const data::ItemCatalog& catalog);
  std::size_t size() const noexcept { return relevant.size(); }
  std::size_t count(Subset s) const;
};

/// Per-user metrics of one model and seed. Users the model does not score
/// have scored = 0 and are left out of every mean.
struct UserScores {
  std::vector<int> ks;
  std::vector<std::uint8_t> scored;
  std::vector<std::vector<std::uint8_t>> hits;  // [k index][user]
  std::vector<std::vector<double>> ap;           // [k index][user]

  std::size_t k_index(int k) const;
  /// Mean over scored users of the subset; nullopt when there are none.
  std::optional<double> mean(Subset s, Metric m, int k, const EvalTarget& target) const;
  std::size_t scored_count(Subset s, const EvalTarget& target) const;
};

/// Post-filters and ranks each prediction, then scores it against the labels.
UserScores score_users(const EvalTarget& target, const std::vector<models::Prediction>& predictions,
                       std::span<const int> ks);

/// Predictions of one model kind for several seeds.
struct ModelRuns {
  models::ModelKind kind = models::ModelKind::popular;
  std::vector<std::uint64_t> seeds;
  std::vector<std::vector<models::Prediction>> predictions;  // per seed, aligned with the target
};

struct Cell {
  std::optional<double> mean;  // absent when the subset has no scored users
  double std = 0.0;            // sample standard deviation over seeds
  std::size_t users = 0;
  std::optional<TestResult> test;  // against the reference model
  bool significant = false;
};

using CellKey = std::tuple<Subset, Metric, int>;

struct ModelResult {
  models::ModelKind kind = models::ModelKind::popular;
  std::vector<std::uint64_t> seeds;
  std::vector<UserScores> per_seed;
  std::map<CellKey, Cell> cells;

  const Cell& cell(Subset s, Metric m, int k) const;
};

struct EvalReport {
  std::vector<int> ks;
  std::array<std::size_t, 4> subset_users{};  // indexed like kSubsets
  std::optional<models::ModelKind> reference;
  std::vector<ModelResult> models;

  const ModelResult* find(models::ModelKind kind) const;
  const ModelResult& at(models::ModelKind kind) const;
};

/// Subset means per seed, then mean and std over seeds. HR cells are tested
/// with McNemar on (seed, user) pairs, MAP cells with one-way ANOVA on the
/// per-seed means, each against `reference` when it is among the runs.
EvalReport evaluate(const EvalTarget& target, const std::vector<ModelRuns>& runs, std::vector<int> ks,
                    std::optional<models::ModelKind> reference = models::ModelKind::latent_feature,
                    double alpha = kSignificanceLevel);

/// Trained recommenders of one kind, one per seed.
struct TrainedRuns {
  models::ModelKind kind = models::ModelKind::popular;
  std::vector<std::uint64_t> seeds;
  std::vector<std::shared_ptr<models::Recommender>> models;
};

ModelRuns predict_runs(const TrainedRuns& runs, const std::vector<data::UserRecord>& users);

}  // namespace mmrec::eval
