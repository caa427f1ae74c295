#include "mmrec/nn/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mmrec/error.hpp"

namespace mmrec::nn {

std::string_view to_string(LossKind k) noexcept {
  return k == LossKind::bce_multilabel ? "bce_multilabel" : "squared_error";
}

void NetworkSpec::validate() const {
  if (layers.empty()) throw ConfigError("network needs at least one layer");
  for (std::size_t i = 0; i < layers.size(); ++i) {
    layers[i].validate();
    if (i > 0 && layers[i].kind == LayerKind::gru) throw ConfigError("a GRU layer may only come first");
    if (i > 0 && layers[i].input_width != layers[i - 1].output_width)
      throw ConfigError("layer " + std::to_string(i) + " input width does not match previous output");
  }
  const Index first_in = latent_map ? latent_map->latent_width : input_width;
  if (layers.front().input_width != first_in)
    throw ConfigError("first layer input width does not match the network input");
  if (layers.back().kind != LayerKind::dense) throw ConfigError("the output layer must be dense");
  if (layers.back().dropout != 0.0) throw ConfigError("the output layer cannot use dropout");
}

template <typename T>
SequenceBatch<T> make_batch(std::span<const EncodedSequence> all, std::span<const Index> selection) {
  SequenceBatch<T> batch;
  batch.size = static_cast<Index>(selection.size());
  std::vector<Index> rows(selection.size());
  std::iota(rows.begin(), rows.end(), Index{0});
  std::stable_sort(rows.begin(), rows.end(), [&](Index a, Index b) {
    return all[selection[a]].size() > all[selection[b]].size();
  });
  batch.order = rows;
  if (rows.empty()) return batch;

  const std::size_t longest = all[selection[rows.front()]].size();
  if (longest == 0) throw DataError("cannot batch an empty sequence");
  batch.steps.resize(longest);
  for (std::size_t t = 0; t < longest; ++t) {
    SequenceStep<T>& step = batch.steps[t];
    Index conv_width = -1, sess_width = -1, conv_n = 0, sess_n = 0;
    for (Index row = 0; row < batch.size; ++row) {
      const EncodedSequence& seq = all[selection[rows[row]]];
      if (seq.size() <= t) break;
      step.active = row + 1;
      const EncodedStep& s = seq.steps[t];
      const Index w = static_cast<Index>(s.values.size());
      Index& width = s.modality == Modality::conversation ? conv_width : sess_width;
      if (width >= 0 && width != w) throw DataError("inconsistent step width within a modality");
      width = w;
      ++(s.modality == Modality::conversation ? conv_n : sess_n);
    }
    if (step.active == 0) throw DataError("cannot batch an empty sequence");
    step.conversation.values.resize(conv_n, std::max<Index>(conv_width, 0));
    step.session.values.resize(sess_n, std::max<Index>(sess_width, 0));
    step.conversation.rows.reserve(conv_n);
    step.session.rows.reserve(sess_n);
    for (Index row = 0; row < step.active; ++row) {
      const EncodedStep& s = all[selection[rows[row]]].steps[t];
      StepBlock<T>& block = s.modality == Modality::conversation ? step.conversation : step.session;
      const Index k = static_cast<Index>(block.rows.size());
      block.rows.push_back(row);
      for (Index j = 0; j < block.values.cols(); ++j) block.values(k, j) = static_cast<T>(s.values[j]);
    }
  }
  return batch;
}

template <typename T>
SequenceBatch<T> make_batch(std::span<const EncodedSequence> all) {
  std::vector<Index> selection(all.size());
  std::iota(selection.begin(), selection.end(), Index{0});
  return make_batch<T>(all, selection);
}

template <typename T>
Matrix<T> gather_rows(const Matrix<T>& source, std::span<const Index> selection,
                      std::span<const Index> order) {
  Matrix<T> out(static_cast<Index>(order.size()), source.cols());
  for (std::size_t row = 0; row < order.size(); ++row) out.row(row) = source.row(selection[order[row]]);
  return out;
}

template <typename T>
Matrix<T> scatter_rows(const Matrix<T>& packed, std::span<const Index> order) {
  Matrix<T> out(packed.rows(), packed.cols());
  for (std::size_t row = 0; row < order.size(); ++row) out.row(order[row]) = packed.row(row);
  return out;
}

namespace {

template <typename T>
T row_loss_sum(LossKind kind, const Matrix<T>& outputs, const Matrix<T>& target) {
  if (outputs.rows() != target.rows() || outputs.cols() != target.cols())
    throw ConfigError("loss: output and target shapes differ");
  double total = 0.0;
  if (kind == LossKind::squared_error) {
    total = static_cast<double>((outputs - target).squaredNorm());
  } else {
    const double eps = kProbabilityEpsilon;
    for (Index i = 0; i < outputs.size(); ++i) {
      const double q = std::clamp(static_cast<double>(sigmoid(outputs.data()[i])), eps, 1.0 - eps);
      const double p = static_cast<double>(target.data()[i]);
      total -= p * std::log(q) + (1.0 - p) * std::log(1.0 - q);
    }
  }
  return static_cast<T>(total);
}

template <typename T>
Matrix<T> loss_grad_unscaled(LossKind kind, const Matrix<T>& outputs, const Matrix<T>& target) {
  if (kind == LossKind::squared_error) return T(2) * (outputs - target);
  Matrix<T> g = outputs;
  activate(Activation::sigmoid, g);
  return g - target;
}

}  // namespace

template <typename T>
T batch_loss(LossKind kind, const Matrix<T>& outputs, const LossTargets<T>& targets) {
  if (outputs.rows() == 0) return T(0);
  T total = row_loss_sum(kind, outputs, targets.hard);
  for (const SoftTarget<T>& s : targets.soft)
    if (s.weight != T(0)) total += s.weight * row_loss_sum(kind, outputs, s.values);
  return total / static_cast<T>(outputs.rows());
}

template <typename T>
Matrix<T> batch_loss_grad(LossKind kind, const Matrix<T>& outputs, const LossTargets<T>& targets) {
  Matrix<T> g = loss_grad_unscaled(kind, outputs, targets.hard);
  for (const SoftTarget<T>& s : targets.soft)
    if (s.weight != T(0)) g += s.weight * loss_grad_unscaled(kind, outputs, s.values);
  return g / static_cast<T>(std::max<Index>(outputs.rows(), 1));
}

template <typename T>
Vector<T> predict_probs(const Vector<T>& logits) {
  return logits.unaryExpr([](T v) { return sigmoid(v); });
}

template <typename T>
T bce_multilabel_loss(const Vector<T>& predicted, const Vector<T>& target) {
  if (predicted.size() != target.size()) throw ConfigError("bce: length mismatch");
  const double eps = kProbabilityEpsilon;
  double loss = 0.0;
  for (Index j = 0; j < predicted.size(); ++j) {
    const double q = std::clamp(static_cast<double>(predicted[j]), eps, 1.0 - eps);
    const double p = static_cast<double>(target[j]);
    loss -= p * std::log(q) + (1.0 - p) * std::log(1.0 - q);
  }
  return static_cast<T>(loss);
}

// Network

template <typename T>
Network<T>::Network(NetworkSpec spec, std::uint64_t seed) : spec_(std::move(spec)) {
  spec_.validate();
  Rng rng(seed);
  if (spec_.latent_map) {
    latent_.emplace(spec_.latent_map->conversation_width, spec_.latent_map->session_width,
                    spec_.latent_map->latent_width);
    latent_->initialize(rng);
  }
  std::size_t dense_index = 0;
  for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
    const LayerSpec& ls = spec_.layers[i];
    if (ls.kind == LayerKind::gru) {
      gru_.emplace(ls, "gru");
      gru_->initialize(rng);
      continue;
    }
    const bool last = i + 1 == spec_.layers.size();
    dense_.emplace_back(ls, last ? std::string("output") : "dense" + std::to_string(++dense_index));
    dense_.back().initialize(rng);
  }
}

template <typename T>
std::vector<Matrix<T>> Network<T>::build_step_inputs(const SequenceBatch<T>& batch) {
  std::vector<Matrix<T>> inputs(batch.steps.size());
  conv_latent_.assign(batch.steps.size(), {});
  sess_latent_.assign(batch.steps.size(), {});
  const Index width = latent_ ? latent_->latent_width() : spec_.input_width;
  for (std::size_t t = 0; t < batch.steps.size(); ++t) {
    const SequenceStep<T>& step = batch.steps[t];
    Matrix<T>& x = inputs[t];
    x.resize(step.active, width);
    const auto place = [&](const StepBlock<T>& block, bool conversation) {
      if (block.rows.empty()) return;
      if (latent_) {
        Matrix<T> mapped = latent_->forward_block(conversation, block.values);
        for (std::size_t k = 0; k < block.rows.size(); ++k) x.row(block.rows[k]) = mapped.row(k);
        (conversation ? conv_latent_ : sess_latent_)[t] = std::move(mapped);
      } else {
        if (block.values.cols() != width)
          throw ConfigError("step width " + std::to_string(block.values.cols()) +
                            " does not match network input width " + std::to_string(width));
        for (std::size_t k = 0; k < block.rows.size(); ++k) x.row(block.rows[k]) = block.values.row(k);
      }
    };
    place(step.conversation, true);
    place(step.session, false);
  }
  return inputs;
}

template <typename T>
Matrix<T> Network<T>::forward(const SequenceBatch<T>& batch, Rng* rng) {
  batch_ = &batch;
  step_inputs_ = build_step_inputs(batch);
  Matrix<T> h;
  if (gru_) {
    h = gru_->forward(step_inputs_, batch.size);
    const double rate = gru_->spec().dropout;
    if (rng != nullptr && rate > 0.0) {
      gru_mask_ = dropout_mask<T>(h.rows(), h.cols(), rate, *rng);
      h.array() *= gru_mask_.array();
    } else {
      gru_mask_.resize(0, 0);
    }
  } else {
    if (step_inputs_.size() != 1 || step_inputs_.front().rows() != batch.size)
      throw DataError("a feed-forward network takes exactly one step per sample");
    h = step_inputs_.front();
  }
  for (Dense<T>& layer : dense_) h = layer.forward(h, rng);
  return h;
}

template <typename T>
void Network<T>::backward(const Matrix<T>& grad_outputs, bool need_input_grad) {
  if (batch_ == nullptr) throw UsageError("backward called without a cached forward pass");
  const SequenceBatch<T>& batch = *batch_;
  Matrix<T> g = grad_outputs;
  const bool need_stack_input = need_input_grad || latent_.has_value();
  for (std::size_t i = dense_.size(); i-- > 0;) {
    const bool first = i == 0 && !gru_;
    g = dense_[i].backward(g, !first || need_stack_input);
  }
  std::vector<Matrix<T>> step_grads;
  if (gru_) {
    if (gru_mask_.size() != 0) g.array() *= gru_mask_.array();
    step_grads = gru_->backward(g, need_stack_input);
  } else if (need_stack_input) {
    step_grads.push_back(std::move(g));
  }
  if (!need_stack_input) return;

  input_grads_.assign(batch.steps.size(), {});
  for (std::size_t t = 0; t < batch.steps.size(); ++t) {
    const SequenceStep<T>& step = batch.steps[t];
    SequenceStep<T>& out = input_grads_[t];
    out.active = step.active;
    const auto pull = [&](const StepBlock<T>& block, StepBlock<T>& dst, bool conversation) {
      dst.rows = block.rows;
      if (block.rows.empty()) return;
      Matrix<T> gl(static_cast<Index>(block.rows.size()), step_grads[t].cols());
      for (std::size_t k = 0; k < block.rows.size(); ++k) gl.row(k) = step_grads[t].row(block.rows[k]);
      if (latent_) {
        const Matrix<T>& mapped = (conversation ? conv_latent_ : sess_latent_)[t];
        dst.values = latent_->backward_block(conversation, block.values, mapped, gl, need_input_grad);
      } else {
        dst.values = std::move(gl);
      }
    };
    pull(step.conversation, out.conversation, true);
    pull(step.session, out.session, false);
  }
}

template <typename T>
Vector<T> Network<T>::forward_one(const EncodedSequence& seq) {
  if (seq.empty()) throw DataError("sequence_forward: empty sequence");
  const EncodedSequence* one = &seq;
  const SequenceBatch<T> batch = make_batch<T>(std::span<const EncodedSequence>(one, 1));
  Matrix<T> out = forward(batch, nullptr);
  batch_ = nullptr;
  return out.row(0).transpose();
}

template <typename T>
Matrix<T> Network<T>::predict(std::span<const EncodedSequence> inputs, Index batch_size) {
  const Index n = static_cast<Index>(inputs.size());
  Matrix<T> result(n, spec_.output_width());
  std::vector<Index> selection;
  for (Index start = 0; start < n; start += batch_size) {
    const Index end = std::min(n, start + batch_size);
    selection.resize(static_cast<std::size_t>(end - start));
    std::iota(selection.begin(), selection.end(), start);
    const SequenceBatch<T> batch = make_batch<T>(inputs, selection);
    Matrix<T> out = forward(batch, nullptr);
    if (spec_.loss == LossKind::bce_multilabel) activate(Activation::sigmoid, out);
    for (Index row = 0; row < out.rows(); ++row) result.row(start + batch.order[row]) = out.row(row);
  }
  batch_ = nullptr;
  return result;
}

template <typename T>
Matrix<T> Network<T>::hidden_representation(std::span<const EncodedSequence> inputs, Index batch_size) {
  const Index n = static_cast<Index>(inputs.size());
  const Index width = spec_.layers.back().input_width;
  Matrix<T> result(n, width);
  std::vector<Index> selection;
  for (Index start = 0; start < n; start += batch_size) {
    const Index end = std::min(n, start + batch_size);
    selection.resize(static_cast<std::size_t>(end - start));
    std::iota(selection.begin(), selection.end(), start);
    const SequenceBatch<T> batch = make_batch<T>(inputs, selection);
    step_inputs_ = build_step_inputs(batch);
    Matrix<T> h = gru_ ? gru_->forward(step_inputs_, batch.size) : step_inputs_.front();
    for (std::size_t i = 0; i + 1 < dense_.size(); ++i) h = dense_[i].forward(h, nullptr);
    for (Index row = 0; row < h.rows(); ++row) result.row(start + batch.order[row]) = h.row(row);
  }
  batch_ = nullptr;
  return result;
}

template <typename T>
std::vector<Matrix<T>> Network<T>::step_representations(std::span<const EncodedSequence> inputs) {
  std::vector<Matrix<T>> out;
  out.reserve(inputs.size());
  for (const EncodedSequence& seq : inputs) {
    const EncodedSequence* one = &seq;
    const SequenceBatch<T> batch = make_batch<T>(std::span<const EncodedSequence>(one, 1));
    const std::vector<Matrix<T>> steps = build_step_inputs(batch);
    Matrix<T> rows(static_cast<Index>(steps.size()), steps.empty() ? 0 : steps.front().cols());
    for (std::size_t t = 0; t < steps.size(); ++t) rows.row(t) = steps[t].row(0);
    out.push_back(std::move(rows));
  }
  return out;
}

template <typename T>
void Network<T>::zero_grad() {
  for (Parameter<T>* p : parameters()) p->grad.setZero();
}

template <typename T>
std::vector<Parameter<T>*> Network<T>::parameters() {
  std::vector<Parameter<T>*> out;
  if (latent_) latent_->collect(out);
  if (gru_) gru_->collect(out);
  for (Dense<T>& d : dense_) d.collect(out);
  return out;
}

template <typename T>
std::vector<const Parameter<T>*> Network<T>::parameters() const {
  std::vector<const Parameter<T>*> out;
  if (latent_) latent_->collect(out);
  if (gru_) gru_->collect(out);
  for (const Dense<T>& d : dense_) d.collect(out);
  return out;
}

template <typename T>
std::size_t Network<T>::parameter_count() const {
  std::size_t n = 0;
  for (const Parameter<T>* p : parameters()) n += static_cast<std::size_t>(p->value.size());
  return n;
}

template <typename T>
std::vector<Matrix<T>> Network<T>::snapshot() const {
  std::vector<Matrix<T>> out;
  for (const Parameter<T>* p : parameters()) out.push_back(p->value);
  return out;
}

template <typename T>
void Network<T>::restore(const std::vector<Matrix<T>>& values) {
  std::vector<Parameter<T>*> params = parameters();
  if (values.size() != params.size()) throw UsageError("restore: parameter count mismatch");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (values[i].rows() != params[i]->value.rows() || values[i].cols() != params[i]->value.cols())
      throw UsageError("restore: shape mismatch for " + params[i]->name);
    params[i]->value = values[i];
  }
}

#define MMREC_INSTANTIATE_NETWORK(T)                                                                  \
  template SequenceBatch<T> make_batch<T>(std::span<const EncodedSequence>, std::span<const Index>);  \
  template SequenceBatch<T> make_batch<T>(std::span<const EncodedSequence>);                          \
  template Matrix<T> gather_rows<T>(const Matrix<T>&, std::span<const Index>, std::span<const Index>); \
  template Matrix<T> scatter_rows<T>(const Matrix<T>&, std::span<const Index>);                       \
  template T batch_loss<T>(LossKind, const Matrix<T>&, const LossTargets<T>&);                        \
  template Matrix<T> batch_loss_grad<T>(LossKind, const Matrix<T>&, const LossTargets<T>&);           \
  template Vector<T> predict_probs<T>(const Vector<T>&);                                              \
  template T bce_multilabel_loss<T>(const Vector<T>&, const Vector<T>&);                              \
  template class Network<T>;

MMREC_INSTANTIATE_NETWORK(float)
MMREC_INSTANTIATE_NETWORK(double)

}  // namespace mmrec::nn
