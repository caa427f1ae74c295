#include "mmrec/nn/adam.hpp"

#include <cmath>

#include "mmrec/error.hpp"

namespace mmrec::nn {

template <typename T>
void Adam<T>::step(std::span<Parameter<T>* const> params) {
  if (m_.empty()) {
    for (const Parameter<T>* p : params) {
      m_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
      v_.push_back(Matrix<T>::Zero(p->value.rows(), p->value.cols()));
    }
  }
  if (m_.size() != params.size()) throw UsageError("Adam: parameter list changed between steps");
  ++steps_;
  const double t = static_cast<double>(steps_);
  const T lr = static_cast<T>(config_.learning_rate * std::sqrt(1.0 - std::pow(config_.beta2, t)) /
                              (1.0 - std::pow(config_.beta1, t)));
  const T b1 = static_cast<T>(config_.beta1), b2 = static_cast<T>(config_.beta2);
  const T eps = static_cast<T>(config_.epsilon);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter<T>& p = *params[i];
    if (p.grad.rows() != m_[i].rows() || p.grad.cols() != m_[i].cols())
      throw UsageError("Adam: shape mismatch for " + p.name);
    m_[i] = b1 * m_[i] + (T(1) - b1) * p.grad;
    v_[i] = b2 * v_[i] + (T(1) - b2) * p.grad.cwiseAbs2();
    p.value.array() -= lr * m_[i].array() / (v_[i].array().sqrt() + eps);
  }
}

template class Adam<float>;
template class Adam<double>;

}  // namespace mmrec::nn
