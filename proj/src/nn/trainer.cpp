#include "mmrec/nn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "mmrec/error.hpp"

namespace mmrec::nn {

void TrainConfig::validate() const {
  if (batch_size < 1) throw ConfigError("batch size must be >= 1");
  if (patience < 1) throw ConfigError("early-stop patience must be >= 1");
  if (max_epochs < 1) throw ConfigError("max epochs must be >= 1");
}

namespace {

template <typename T>
LossTargets<T> targets_for(const LabeledData<T>& data, std::span<const Index> selection,
                           std::span<const Index> order) {
  LossTargets<T> t;
  t.hard = gather_rows(data.targets, selection, order);
  for (const SoftTarget<T>& s : data.soft) t.soft.push_back({s.weight, gather_rows(s.values, selection, order)});
  return t;
}

template <typename T>
void check_data(const LabeledData<T>& data, const char* what) {
  if (data.targets.rows() != data.size()) throw ConfigError(std::string(what) + ": targets/input count mismatch");
  for (const SoftTarget<T>& s : data.soft)
    if (s.values.rows() != data.size() || s.values.cols() != data.targets.cols())
      throw ConfigError(std::string(what) + ": soft target shape mismatch");
}

}  // namespace

template <typename T>
double evaluate_loss(Network<T>& net, const LabeledData<T>& data, Index batch_size) {
  check_data(data, "evaluate_loss");
  const Index n = data.size();
  if (n == 0) return 0.0;
  double total = 0.0;
  std::vector<Index> selection;
  for (Index start = 0; start < n; start += batch_size) {
    const Index end = std::min(n, start + batch_size);
    selection.resize(static_cast<std::size_t>(end - start));
    std::iota(selection.begin(), selection.end(), start);
    const SequenceBatch<T> batch = make_batch<T>(data.inputs, selection);
    const Matrix<T> out = net.forward(batch, nullptr);
    const LossTargets<T> targets = targets_for(data, selection, batch.order);
    total += static_cast<double>(batch_loss(net.spec().loss, out, targets)) * static_cast<double>(end - start);
  }
  return total / static_cast<double>(n);
}

template <typename T>
TrainResult train(Network<T>& net, const LabeledData<T>& train_set, const LabeledData<T>& valid_set,
                  const TrainConfig& config) {
  config.validate();
  check_data(train_set, "train");
  check_data(valid_set, "valid");
  if (train_set.size() == 0 || valid_set.size() == 0)
    throw TrainingError("training and validation sets must be nonempty");

  Rng shuffle_rng(config.seed);
  Rng dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  Adam<T> adam(config.adam);
  const std::vector<Parameter<T>*> params = net.parameters();

  TrainResult result;
  result.best_valid_loss = std::numeric_limits<double>::infinity();
  std::vector<Matrix<T>> best = net.snapshot();
  int since_best = 0;

  std::vector<Index> perm(static_cast<std::size_t>(train_set.size()));
  std::iota(perm.begin(), perm.end(), Index{0});
  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(perm.begin(), perm.end(), shuffle_rng);
    double epoch_loss = 0.0;
    int batch_no = 0;
    for (std::size_t start = 0; start < perm.size(); start += static_cast<std::size_t>(config.batch_size)) {
      ++batch_no;
      const std::size_t end = std::min(perm.size(), start + static_cast<std::size_t>(config.batch_size));
      const std::span<const Index> selection(perm.data() + start, end - start);
      const SequenceBatch<T> batch = make_batch<T>(train_set.inputs, selection);
      const LossTargets<T> targets = targets_for(train_set, selection, batch.order);
      net.zero_grad();
      const Matrix<T> out = net.forward(batch, &dropout_rng);
      const T loss = batch_loss(net.spec().loss, out, targets);
      if (!std::isfinite(static_cast<double>(loss)))
        throw TrainingError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(batch_no));
      net.backward(batch_loss_grad(net.spec().loss, out, targets));
      adam.step(params);
      epoch_loss += static_cast<double>(loss) * static_cast<double>(end - start);
    }
    const double valid_loss = evaluate_loss(net, valid_set);
    if (!std::isfinite(valid_loss))
      throw TrainingError("non-finite validation loss at epoch " + std::to_string(epoch));
    result.log.push_back({epoch, epoch_loss / static_cast<double>(perm.size()), valid_loss});
    if (valid_loss < result.best_valid_loss) {
      result.best_valid_loss = valid_loss;
      result.best_epoch = epoch;
      best = net.snapshot();
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }
  net.restore(best);
  return result;
}

template double evaluate_loss<float>(Network<float>&, const LabeledData<float>&, Index);
template double evaluate_loss<double>(Network<double>&, const LabeledData<double>&, Index);
template TrainResult train<float>(Network<float>&, const LabeledData<float>&, const LabeledData<float>&,
                                  const TrainConfig&);
template TrainResult train<double>(Network<double>&, const LabeledData<double>&, const LabeledData<double>&,
                                   const TrainConfig&);

}  // namespace mmrec::nn
