#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmrec/nn/layers.hpp"
#include "mmrec/sequence.hpp"

namespace mmrec::nn {

enum class LossKind { bce_multilabel, squared_error };

std::string_view to_string(LossKind k) noexcept;

/// Probability clamp applied before taking logs.
inline constexpr double kProbabilityEpsilon = 1e-7;

struct LatentMapSpec {
  Index conversation_width = 1;
  Index session_width = 1;
  Index latent_width = 1;
};

/// Architecture: optional modality latent map, optional leading GRU, then
/// dense layers. The last layer is the output layer (logits for BCE).
struct NetworkSpec {
  Index input_width = 1;  // shared step width when there is no latent map
  std::optional<LatentMapSpec> latent_map;
  std::vector<LayerSpec> layers;
  LossKind loss = LossKind::bce_multilabel;

  bool recurrent() const noexcept { return !layers.empty() && layers.front().kind == LayerKind::gru; }
  Index output_width() const noexcept { return layers.empty() ? 0 : layers.back().output_width; }
  void validate() const;
};

template <typename T>
struct StepBlock {
  std::vector<Index> rows;  // batch rows carried by this block
  Matrix<T> values;         // one row per entry of `rows`
};

template <typename T>
struct SequenceStep {
  Index active = 0;  // rows [0, active) take part in this step
  StepBlock<T> conversation;
  StepBlock<T> session;
};

/// Sequences packed longest-first so that step t covers a row prefix.
template <typename T>
struct SequenceBatch {
  Index size = 0;
  std::vector<SequenceStep<T>> steps;
  std::vector<Index> order;  // order[row] = position of the sample in the caller's list
};

/// Packs the selected sequences. Ties in length keep the caller's order.
template <typename T>
SequenceBatch<T> make_batch(std::span<const EncodedSequence> all, std::span<const Index> selection);

template <typename T>
SequenceBatch<T> make_batch(std::span<const EncodedSequence> all);

/// Gathers `rows` of `source` in the batch order.
template <typename T>
Matrix<T> gather_rows(const Matrix<T>& source, std::span<const Index> selection,
                      std::span<const Index> order);

/// Restores caller order: row order[i] of the result is row i of `packed`.
template <typename T>
Matrix<T> scatter_rows(const Matrix<T>& packed, std::span<const Index> order);

template <typename T>
struct SoftTarget {
  T weight = T(0);
  Matrix<T> values;
};

/// Hard targets plus optional weighted soft targets, all in batch order.
template <typename T>
struct LossTargets {
  Matrix<T> hard;
  std::vector<SoftTarget<T>> soft;
};

/// Mean over rows of the per-row loss, plus weighted soft-target terms.
template <typename T>
T batch_loss(LossKind kind, const Matrix<T>& outputs, const LossTargets<T>& targets);

/// Gradient of batch_loss w.r.t. the outputs. For BCE this is the logit form
/// (sigmoid(o) - t) / rows, which equals the clamped loss gradient wherever
/// the clamp is inactive.
template <typename T>
Matrix<T> batch_loss_grad(LossKind kind, const Matrix<T>& outputs, const LossTargets<T>& targets);

/// Element-wise sigmoid.
template <typename T>
Vector<T> predict_probs(const Vector<T>& logits);

/// -sum_j [p_j ln q_j + (1 - p_j) ln(1 - q_j)], q clamped to [eps, 1 - eps].
template <typename T>
T bce_multilabel_loss(const Vector<T>& predicted, const Vector<T>& target);

template <typename T>
class Network {
 public:
  Network() = default;
  Network(NetworkSpec spec, std::uint64_t seed);

  const NetworkSpec& spec() const noexcept { return spec_; }

  /// Output layer values (logits for BCE) in batch order. `rng` enables dropout.
  Matrix<T> forward(const SequenceBatch<T>& batch, Rng* rng);
  /// Backpropagates from d loss / d outputs; accumulates parameter gradients.
  void backward(const Matrix<T>& grad_outputs, bool need_input_grad = false);

  /// Gradients w.r.t. step inputs from the last backward(true), per step.
  const std::vector<SequenceStep<T>>& input_gradients() const noexcept { return input_grads_; }

  /// Inference on one sequence: pre-sigmoid output vector.
  Vector<T> forward_one(const EncodedSequence& seq);

  /// Inference probabilities (sigmoid applied for BCE nets) in caller order.
  Matrix<T> predict(std::span<const EncodedSequence> inputs, Index batch_size = 512);

  /// Last hidden layer activations (input of the output layer) in caller order.
  Matrix<T> hidden_representation(std::span<const EncodedSequence> inputs, Index batch_size = 512);

  /// Per-step inputs of the recurrent/dense stack (after the latent map), one
  /// row per event, listed per sequence in caller order.
  std::vector<Matrix<T>> step_representations(std::span<const EncodedSequence> inputs);

  void zero_grad();
  std::vector<Parameter<T>*> parameters();
  std::vector<const Parameter<T>*> parameters() const;
  std::size_t parameter_count() const;

  std::vector<Matrix<T>> snapshot() const;
  void restore(const std::vector<Matrix<T>>& values);

 private:
  std::vector<Matrix<T>> build_step_inputs(const SequenceBatch<T>& batch);

  NetworkSpec spec_;
  std::optional<LatentMap<T>> latent_;
  std::optional<Gru<T>> gru_;
  std::vector<Dense<T>> dense_;

  // forward caches
  const SequenceBatch<T>* batch_ = nullptr;
  std::vector<Matrix<T>> step_inputs_;
  std::vector<Matrix<T>> conv_latent_;
  std::vector<Matrix<T>> sess_latent_;
  Matrix<T> gru_mask_;
  std::vector<SequenceStep<T>> input_grads_;
};

}  // namespace mmrec::nn
