#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "mmrec/data/preprocess.hpp"
#include "mmrec/data/split.hpp"
#include "mmrec/encoders/sequence.hpp"
#include "mmrec/eval/ablation.hpp"
#include "mmrec/eval/evaluate.hpp"
#include "mmrec/harness/config.hpp"
#include "mmrec/harness/manifest.hpp"
#include "mmrec/models/zoo.hpp"

namespace mmrec::harness {

struct PreparedData {
  data::Dataset dataset;  // after preprocessing
  std::string raw_fingerprint;
  std::string fingerprint;  // of `dataset`
  std::optional<data::PreprocessReport> preprocess_report;
  data::Split split;
  std::shared_ptr<enc::EncoderSet> encoders;
};

/// Loads or generates the dataset, preprocesses, splits and fits encoders.
PreparedData prepare_data(const ExperimentConfig& cfg);

nlohmann::json data_summary(const PreparedData& d);

models::TrainingContext training_context(const ExperimentConfig& cfg, const PreparedData& d, std::uint64_t seed);

/// One model set per seed; each set also holds the dependencies of the
/// requested kinds.
struct TrainedExperiment {
  std::vector<std::uint64_t> seeds;
  std::vector<models::ModelSet> sets;

  eval::TrainedRuns runs(models::ModelKind kind) const;
  std::vector<eval::TrainedRuns> runs(const std::vector<models::ModelKind>& kinds) const;
};

/// Trains every requested kind for every seed, seeds in parallel.
TrainedExperiment train_experiment(const ExperimentConfig& cfg, const PreparedData& d, int workers);

std::string bundle_dir(const std::string& output_dir, std::uint64_t seed);
std::string report_dir(const std::string& output_dir);

void save_experiment(const std::string& output_dir, const TrainedExperiment& e, const std::string& fingerprint,
                     RunManifest* manifest = nullptr);

/// Fails with an IoError naming the (model, seed) pair of a missing bundle.
TrainedExperiment load_experiment(const std::string& output_dir, const std::vector<models::ModelKind>& kinds,
                                  const std::vector<std::uint64_t>& seeds, const PreparedData& d);

eval::EvalReport evaluate_experiment(const ExperimentConfig& cfg, const PreparedData& d, const TrainedExperiment& e);

/// Writes table.tsv, metrics.tsv and curves.tsv; returns their paths.
std::vector<std::string> write_reports(const std::string& dir, const eval::EvalReport& report, int table_k);

struct AblationRequest {
  bool event_count = true;
  bool order = true;
};

/// Event-count curve on the trained models and order-shuffle retraining;
/// writes event_count.tsv, order.tsv and order_long.tsv.
std::vector<std::string> run_ablations(const ExperimentConfig& cfg, const PreparedData& d, const TrainedExperiment& e,
                                       const eval::EvalReport& original, AblationRequest what, int workers);

/// Cutoff of the summary table: 3 when evaluated, else the largest k.
int table_cutoff(const std::vector<int>& ks);

/// Writes `content` to `path`, creating parent directories.
void write_text(const std::string& path, const std::string& content);

}  // namespace mmrec::harness
