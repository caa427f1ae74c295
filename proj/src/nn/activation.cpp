#include "mmrec/nn/tensor.hpp"

#include <string>

#include "mmrec/error.hpp"

namespace mmrec::nn {

std::string_view to_string(Activation a) noexcept {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::sigmoid: return "sigmoid";
    case Activation::tanh: return "tanh";
    case Activation::relu: return "relu";
  }
  return "identity";
}

Activation parse_activation(std::string_view name) {
  if (name == "identity") return Activation::identity;
  if (name == "sigmoid") return Activation::sigmoid;
  if (name == "tanh") return Activation::tanh;
  if (name == "relu") return Activation::relu;
  throw ConfigError("unknown activation '" + std::string(name) + "'");
}

template <typename T>
void activate(Activation a, Matrix<T>& values) {
  switch (a) {
    case Activation::identity: break;
    case Activation::sigmoid: values = values.unaryExpr([](T x) { return sigmoid(x); }); break;
    case Activation::tanh: values = values.array().tanh().matrix(); break;
    case Activation::relu: values = values.cwiseMax(T(0)); break;
  }
}

template <typename T>
void scale_by_derivative(Activation a, const Matrix<T>& y, Matrix<T>& grad) {
  switch (a) {
    case Activation::identity: break;
    case Activation::sigmoid: grad.array() *= y.array() * (T(1) - y.array()); break;
    case Activation::tanh: grad.array() *= T(1) - y.array().square(); break;
    case Activation::relu: grad.array() *= (y.array() > T(0)).template cast<T>(); break;
  }
}

template void activate<float>(Activation, Matrix<float>&);
template void activate<double>(Activation, Matrix<double>&);
template void scale_by_derivative<float>(Activation, const Matrix<float>&, Matrix<float>&);
template void scale_by_derivative<double>(Activation, const Matrix<double>&, Matrix<double>&);

}  // namespace mmrec::nn
