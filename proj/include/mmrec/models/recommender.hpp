#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mmrec/data/types.hpp"
#include "mmrec/encoders/sequence.hpp"
#include "mmrec/inference_lock.hpp"
#include "mmrec/models/model_kind.hpp"
#include "mmrec/nn/trainer.hpp"

namespace mmrec::models {

/// Item probabilities, or nullopt when the model cannot score the user.
using Prediction = std::optional<std::vector<double>>;

struct TrainingContext {
  const std::vector<data::UserRecord>* train = nullptr;
  const std::vector<data::UserRecord>* valid = nullptr;
  int item_count = 0;
  std::shared_ptr<const enc::EncoderSet> encoders;  // vocabularies and tag map
  std::uint64_t seed = 0;
  int max_epochs = 200;
  int patience = 5;
  nn::AdamConfig adam;
  std::map<ModelKind, Hyperparameters> hyper;  // overrides the per-model defaults
  double kd_alpha = 0.32;
  double kd_beta = 0.87;
  enc::AnchorConfig anchor;

  void validate() const;
  Hyperparameters hyper_for(ModelKind k) const {
    const auto it = hyper.find(k);
    return it == hyper.end() ? default_hyperparameters(k) : it->second;
  }
  /// Trainer settings for one network of a model.
  nn::TrainConfig train_config(ModelKind k, nn::Index batch_size, int sub = 0) const;
  std::uint64_t network_seed(ModelKind k, int sub = 0) const;
};

struct TrainInfo {
  std::uint64_t seed = 0;
  Hyperparameters hyper;
  std::vector<std::pair<std::string, nn::TrainResult>> logs;  // per trained network
};

class Recommender {
 public:
  virtual ~Recommender() = default;
  virtual ModelKind kind() const noexcept = 0;
  /// One prediction per user, in input order. Safe to call concurrently.
  virtual std::vector<Prediction> predict(const std::vector<data::UserRecord>& users) = 0;

  TrainInfo& info() noexcept { return info_; }
  const TrainInfo& info() const noexcept { return info_; }

 protected:
  std::mutex& inference_mutex() const noexcept { return lock_.get(); }

 private:
  TrainInfo info_;
  InferenceLock lock_;
};

}  // namespace mmrec::models
