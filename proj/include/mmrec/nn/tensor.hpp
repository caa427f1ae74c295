#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string_view>

namespace mmrec::nn {

using Index = Eigen::Index;

/// Scalar used for model training.
#ifdef MMREC_TRAIN_DOUBLE
using Real = double;
#else
using Real = float;
#endif

/// Row-major dense matrix; batches are laid out one sample per row.
template <typename T>
using Matrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <typename T>
using Vector = Eigen::Matrix<T, Eigen::Dynamic, 1>;

enum class Activation { identity, sigmoid, tanh, relu };

std::string_view to_string(Activation a) noexcept;
Activation parse_activation(std::string_view name);

/// Logistic function that does not overflow for large |x|.
template <typename T>
inline T sigmoid(T x) noexcept {
  if (x >= T(0)) return T(1) / (T(1) + std::exp(-x));
  const T e = std::exp(x);
  return e / (T(1) + e);
}

/// Applies the activation in place.
template <typename T>
void activate(Activation a, Matrix<T>& values);

/// Multiplies `grad` element-wise by the activation derivative, expressed
/// through the activated output `y`.
template <typename T>
void scale_by_derivative(Activation a, const Matrix<T>& y, Matrix<T>& grad);

template <typename T>
bool all_finite(const Matrix<T>& m) {
  return m.allFinite();
}

}  // namespace mmrec::nn
