#pragma once

#include <random>
#include <span>
#include <string>
#include <vector>

#include "mmrec/nn/tensor.hpp"

namespace mmrec::nn {

enum class LayerKind { dense, gru };

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  Index input_width = 1;
  Index output_width = 1;
  Activation activation = Activation::identity;  // ignored for gru
  double dropout = 0.0;                          // applied to the layer output while training
  bool has_bias = true;

  void validate() const;
};

template <typename T>
struct Parameter {
  std::string name;
  Matrix<T> value;
  Matrix<T> grad;

  Parameter() = default;
  Parameter(std::string n, Index rows, Index cols)
      : name(std::move(n)), value(Matrix<T>::Zero(rows, cols)), grad(Matrix<T>::Zero(rows, cols)) {}
};

using Rng = std::mt19937_64;

/// Glorot-uniform fill for a (fan_out x fan_in) weight.
template <typename T>
void glorot_uniform(Matrix<T>& w, Rng& rng);

/// Fills a square matrix with a random orthogonal matrix.
template <typename T>
void orthogonal(Matrix<T>& w, Rng& rng);

/// Inverted dropout mask (entries 0 or 1/(1-rate)).
template <typename T>
Matrix<T> dropout_mask(Index rows, Index cols, double rate, Rng& rng);

/// Fully connected layer computing act(x W^T + b) for a batch of rows.
template <typename T>
class Dense {
 public:
  Dense() = default;
  Dense(const LayerSpec& spec, const std::string& name);

  void initialize(Rng& rng);
  const LayerSpec& spec() const noexcept { return spec_; }

  /// Caches what backward() needs. `rng` enables dropout; nullptr is inference.
  Matrix<T> forward(const Matrix<T>& x, Rng* rng);
  /// Accumulates parameter gradients and returns the gradient w.r.t. the input.
  Matrix<T> backward(const Matrix<T>& grad_out, bool need_input_grad = true);

  void collect(std::vector<Parameter<T>*>& out);
  void collect(std::vector<const Parameter<T>*>& out) const;

 private:
  LayerSpec spec_;
  Parameter<T> weight_;
  Parameter<T> bias_;
  Matrix<T> input_;
  Matrix<T> activated_;
  Matrix<T> mask_;
  bool cached_ = false;
};

/// Single-layer GRU run over packed sequences.
///
/// Step t receives an (n_t x input) matrix whose rows are the first n_t
/// samples of the batch; n_t must be non-increasing in t, so a sample whose
/// sequence has ended keeps its last hidden state.
template <typename T>
class Gru {
 public:
  Gru() = default;
  Gru(const LayerSpec& spec, const std::string& name);

  void initialize(Rng& rng);
  const LayerSpec& spec() const noexcept { return spec_; }

  /// Returns the final hidden state of every sample (batch x hidden).
  Matrix<T> forward(std::span<const Matrix<T>> steps, Index batch);
  /// Backpropagates through time from the gradient of the final states.
  /// Returns per-step input gradients when requested, otherwise an empty vector.
  std::vector<Matrix<T>> backward(const Matrix<T>& grad_final, bool need_input_grad);

  void collect(std::vector<Parameter<T>*>& out);
  void collect(std::vector<const Parameter<T>*>& out) const;

 private:
  struct StepCache {
    Matrix<T> x, h_prev, z, r, candidate, reset_h;
  };

  LayerSpec spec_;
  Parameter<T> w_z_, u_z_, b_z_;
  Parameter<T> w_r_, u_r_, b_r_;
  Parameter<T> w_h_, u_h_, b_h_;
  std::vector<StepCache> cache_;
  Index batch_ = 0;
  bool cached_ = false;
};

/// Modality-specific projection into a shared latent space:
/// tanh(W_c x + b_c) for conversations, tanh(W_s x + b_s) for sessions.
template <typename T>
class LatentMap {
 public:
  LatentMap() = default;
  LatentMap(Index conversation_width, Index session_width, Index latent_width);

  void initialize(Rng& rng);
  Index conversation_width() const noexcept { return w_conv_.value.cols(); }
  Index session_width() const noexcept { return w_sess_.value.cols(); }
  Index latent_width() const noexcept { return w_conv_.value.rows(); }

  /// Maps one modality block; the caller scatters rows.
  Matrix<T> forward_block(bool conversation, const Matrix<T>& x) const;
  /// Gradient w.r.t. the block input; accumulates W/b gradients.
  Matrix<T> backward_block(bool conversation, const Matrix<T>& x, const Matrix<T>& latent,
                           const Matrix<T>& grad_latent, bool need_input_grad);

  void collect(std::vector<Parameter<T>*>& out);
  void collect(std::vector<const Parameter<T>*>& out) const;

 private:
  Parameter<T> w_conv_, b_conv_, w_sess_, b_sess_;
};

// Single-vector reference operations.

/// act(W x + b). Throws ConfigError on dimension mismatch.
template <typename T>
Vector<T> dense_forward(const Vector<T>& x, const Matrix<T>& w, const Vector<T>& b, Activation act);

template <typename T>
struct GruWeights {
  Matrix<T> w_z, u_z, w_r, u_r, w_h, u_h;
  Vector<T> b_z, b_r, b_h;

  static GruWeights zeros(Index input, Index hidden);
};

/// One GRU step: z = s(W_z x + U_z h + b_z), r = s(W_r x + U_r h + b_r),
/// c = tanh(W_h x + U_h (r*h) + b_h), h' = (1-z)*h + z*c.
/// Throws NumericError on non-finite input.
template <typename T>
Vector<T> gru_step(const Vector<T>& x, const Vector<T>& h_prev, const GruWeights<T>& p);

}  // namespace mmrec::nn
