#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mmrec/nn/adam.hpp"
#include "mmrec/nn/network.hpp"

namespace mmrec::nn {

struct TrainConfig {
  Index batch_size = 256;
  int max_epochs = 200;
  int patience = 5;
  std::uint64_t seed = 0;
  AdamConfig adam;

  void validate() const;
};

/// Inputs with their targets. Soft targets carry per-target weights.
template <typename T>
struct LabeledData {
  std::vector<EncodedSequence> inputs;
  Matrix<T> targets;
  std::vector<SoftTarget<T>> soft;

  Index size() const noexcept { return static_cast<Index>(inputs.size()); }
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double valid_loss = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  int best_epoch = 0;
  double best_valid_loss = 0.0;
};

/// Mean loss over a dataset without dropout.
template <typename T>
double evaluate_loss(Network<T>& net, const LabeledData<T>& data, Index batch_size = 512);

/// Minibatch Adam training with per-epoch validation. The network ends up
/// holding the parameters of the epoch with minimum validation loss;
/// training stops after `patience` epochs without improvement.
/// Throws TrainingError on a non-finite loss, naming epoch and batch.
template <typename T>
TrainResult train(Network<T>& net, const LabeledData<T>& train_set, const LabeledData<T>& valid_set,
                  const TrainConfig& config);

}  // namespace mmrec::nn
