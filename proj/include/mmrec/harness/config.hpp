#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmrec/data/preprocess.hpp"
#include "mmrec/data/synthetic.hpp"
#include "mmrec/models/model_kind.hpp"
#include "mmrec/nn/adam.hpp"

namespace mmrec::harness {

struct GridConfig {
  std::vector<nn::Index> batch_sizes = {64, 128, 256, 512};
  std::vector<nn::Index> units = {64, 128, 256};
  std::vector<double> dropouts = {0.2, 0.3, 0.4};
  std::vector<models::ModelKind> models;  // empty: every model with a network
  std::uint64_t seed = 1;

  std::size_t size() const noexcept { return batch_sizes.size() * units.size() * dropouts.size(); }
  void validate() const;
};

struct AblationSettings {
  std::vector<int> event_counts = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  int order_shuffles = 5;
  std::uint64_t shuffle_seed = 7;
  std::vector<models::ModelKind> order_models = {models::ModelKind::latent_feature};
  int k = 3;

  void validate() const;
};

struct ExperimentConfig {
  // data
  std::string dataset_path;  // empty: generate synthetic data
  std::string tag_map_path;  // empty: identity keyword mapping
  data::GeneratorConfig generator;
  bool preprocess = true;
  data::PreprocessConfig preprocessing;
  double test_fraction = 0.1;
  double valid_fraction = 0.1;
  double min_token_share = 0.001;

  // experiment
  std::vector<models::ModelKind> models{models::kAllModels.begin(), models::kAllModels.end()};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::vector<int> ks = {1, 2, 3, 4, 5};
  std::string output_dir = "runs/default";
  int workers = 0;  // 0: MMREC_WORKERS, else the hardware concurrency
  std::optional<models::ModelKind> reference = models::ModelKind::latent_feature;

  // training
  int max_epochs = 200;
  int patience = 5;
  nn::AdamConfig adam;
  double kd_alpha = 0.32;
  double kd_beta = 0.87;
  int anchor_count = 125;
  nn::Index anchor_latent_width = 64;
  double anchor_dropout = 0.3;
  std::map<models::ModelKind, models::Hyperparameters> hyper;

  GridConfig grid;
  AblationSettings ablation;

  void validate() const;
};

/// INI text with [data], [generator], [preprocess], [experiment], [training],
/// [anchors], [gridsearch], [ablation] and [hyper.<model>] sections. Missing
/// keys keep their defaults; unknown keys are rejected.
ExperimentConfig parse_config(std::string_view text, const std::string& source = "config");
ExperimentConfig load_config(const std::string& path);

/// Sets one key as if it appeared in the INI text; does not validate.
void set_option(ExperimentConfig& cfg, const std::string& section, const std::string& key, const std::string& value);

/// Merges the [hyper.<model>] sections of an INI text into `cfg`.
void merge_hyperparameters(ExperimentConfig& cfg, std::string_view text, const std::string& source);

/// Fully resolved configuration; parse_config(to_ini(c)) == c.
std::string to_ini(const ExperimentConfig& cfg);

/// INI text holding only [hyper.<model>] sections.
std::string hyperparameters_ini(const std::map<models::ModelKind, models::Hyperparameters>& hyper);

/// `configured` when positive, else MMREC_WORKERS, else the hardware concurrency.
int resolve_workers(int configured);

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b);

}  // namespace mmrec::harness
