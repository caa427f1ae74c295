#include "mmrec/nn/layers.hpp"

#include <cmath>
#include <string>

#include "mmrec/error.hpp"

namespace mmrec::nn {

void LayerSpec::validate() const {
  if (input_width < 1 || output_width < 1) throw ConfigError("layer widths must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
}

template <typename T>
void glorot_uniform(Matrix<T>& w, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Index i = 0; i < w.size(); ++i) w.data()[i] = static_cast<T>(dist(rng));
}

template <typename T>
void orthogonal(Matrix<T>& w, Rng& rng) {
  const Index n = w.rows();
  if (w.cols() != n) throw ConfigError("orthogonal init needs a square matrix");
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd a(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) a(i, j) = dist(rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ();
  const Eigen::MatrixXd r = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (Index j = 0; j < n; ++j)
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  w = q.cast<T>();
}

template <typename T>
Matrix<T> dropout_mask(Index rows, Index cols, double rate, Rng& rng) {
  Matrix<T> mask(rows, cols);
  std::bernoulli_distribution keep(1.0 - rate);
  const T scale = static_cast<T>(1.0 / (1.0 - rate));
  for (Index i = 0; i < mask.size(); ++i) mask.data()[i] = keep(rng) ? scale : T(0);
  return mask;
}

// Dense

template <typename T>
Dense<T>::Dense(const LayerSpec& spec, const std::string& name)
    : spec_(spec),
      weight_(name + ".w", spec.output_width, spec.input_width),
      bias_(name + ".b", spec.has_bias ? 1 : 0, spec.output_width) {
  spec_.validate();
  if (spec.kind != LayerKind::dense) throw ConfigError("Dense built from a non-dense spec");
}

template <typename T>
void Dense<T>::initialize(Rng& rng) {
  glorot_uniform(weight_.value, rng);
  bias_.value.setZero();
}

template <typename T>
Matrix<T> Dense<T>::forward(const Matrix<T>& x, Rng* rng) {
  if (x.cols() != spec_.input_width)
    throw ConfigError(weight_.name + ": expected input width " + std::to_string(spec_.input_width) +
                      ", got " + std::to_string(x.cols()));
  input_ = x;
  activated_.noalias() = x * weight_.value.transpose();
  if (spec_.has_bias) activated_.rowwise() += bias_.value.row(0);
  activate(spec_.activation, activated_);
  cached_ = true;
  if (rng != nullptr && spec_.dropout > 0.0) {
    mask_ = dropout_mask<T>(activated_.rows(), activated_.cols(), spec_.dropout, *rng);
    return activated_.cwiseProduct(mask_);
  }
  mask_.resize(0, 0);
  return activated_;
}

template <typename T>
Matrix<T> Dense<T>::backward(const Matrix<T>& grad_out, bool need_input_grad) {
  if (!cached_) throw UsageError(weight_.name + ": backward called without a cached forward pass");
  Matrix<T> g = grad_out;
  if (mask_.size() != 0) g.array() *= mask_.array();
  scale_by_derivative(spec_.activation, activated_, g);
  weight_.grad.noalias() += g.transpose() * input_;
  if (spec_.has_bias) bias_.grad.row(0) += g.colwise().sum();
  if (!need_input_grad) return {};
  return g * weight_.value;
}

template <typename T>
void Dense<T>::collect(std::vector<Parameter<T>*>& out) {
  out.push_back(&weight_);
  if (spec_.has_bias) out.push_back(&bias_);
}

template <typename T>
void Dense<T>::collect(std::vector<const Parameter<T>*>& out) const {
  out.push_back(&weight_);
  if (spec_.has_bias) out.push_back(&bias_);
}

// Gru

template <typename T>
Gru<T>::Gru(const LayerSpec& spec, const std::string& name)
    : spec_(spec),
      w_z_(name + ".w_z", spec.output_width, spec.input_width),
      u_z_(name + ".u_z", spec.output_width, spec.output_width),
      b_z_(name + ".b_z", spec.has_bias ? 1 : 0, spec.output_width),
      w_r_(name + ".w_r", spec.output_width, spec.input_width),
      u_r_(name + ".u_r", spec.output_width, spec.output_width),
      b_r_(name + ".b_r", spec.has_bias ? 1 : 0, spec.output_width),
      w_h_(name + ".w_h", spec.output_width, spec.input_width),
      u_h_(name + ".u_h", spec.output_width, spec.output_width),
      b_h_(name + ".b_h", spec.has_bias ? 1 : 0, spec.output_width) {
  spec_.validate();
  if (spec.kind != LayerKind::gru) throw ConfigError("Gru built from a non-gru spec");
}

template <typename T>
void Gru<T>::initialize(Rng& rng) {
  for (auto* w : {&w_z_, &w_r_, &w_h_}) glorot_uniform(w->value, rng);
  for (auto* u : {&u_z_, &u_r_, &u_h_}) orthogonal(u->value, rng);
  for (auto* b : {&b_z_, &b_r_, &b_h_}) b->value.setZero();
}

template <typename T>
Matrix<T> Gru<T>::forward(std::span<const Matrix<T>> steps, Index batch) {
  const Index hidden = spec_.output_width;
  Matrix<T> h = Matrix<T>::Zero(batch, hidden);
  cache_.clear();
  cache_.reserve(steps.size());
  Index previous_rows = batch;
  for (const Matrix<T>& x : steps) {
    const Index n = x.rows();
    if (n > previous_rows) throw UsageError("GRU steps must have non-increasing row counts");
    if (x.cols() != spec_.input_width)
      throw ConfigError("GRU: expected input width " + std::to_string(spec_.input_width) + ", got " +
                        std::to_string(x.cols()));
    previous_rows = n;
    StepCache c;
    c.x = x;
    c.h_prev = h.topRows(n);

    c.z.noalias() = x * w_z_.value.transpose();
    c.z.noalias() += c.h_prev * u_z_.value.transpose();
    c.r.noalias() = x * w_r_.value.transpose();
    c.r.noalias() += c.h_prev * u_r_.value.transpose();
    if (spec_.has_bias) {
      c.z.rowwise() += b_z_.value.row(0);
      c.r.rowwise() += b_r_.value.row(0);
    }
    activate(Activation::sigmoid, c.z);
    activate(Activation::sigmoid, c.r);
    c.reset_h = c.r.cwiseProduct(c.h_prev);
    c.candidate.noalias() = x * w_h_.value.transpose();
    c.candidate.noalias() += c.reset_h * u_h_.value.transpose();
    if (spec_.has_bias) c.candidate.rowwise() += b_h_.value.row(0);
    activate(Activation::tanh, c.candidate);

    h.topRows(n) = c.h_prev + c.z.cwiseProduct(c.candidate - c.h_prev);
    cache_.push_back(std::move(c));
  }
  batch_ = batch;
  cached_ = true;
  return h;
}

template <typename T>
std::vector<Matrix<T>> Gru<T>::backward(const Matrix<T>& grad_final, bool need_input_grad) {
  if (!cached_) throw UsageError("GRU: backward called without a cached forward pass");
  if (grad_final.rows() != batch_ || grad_final.cols() != spec_.output_width)
    throw UsageError("GRU: gradient shape does not match the forward batch");
  Matrix<T> dh = grad_final;
  std::vector<Matrix<T>> dx(need_input_grad ? cache_.size() : 0);
  for (std::size_t t = cache_.size(); t-- > 0;) {
    const StepCache& c = cache_[t];
    const Index n = c.x.rows();
    const Matrix<T> g = dh.topRows(n);

    // h' = h + z * (c - h)
    Matrix<T> dz = g.cwiseProduct(c.candidate - c.h_prev);
    Matrix<T> d_cand = g.cwiseProduct(c.z);
    Matrix<T> d_prev = g - d_cand;

    d_cand.array() *= T(1) - c.candidate.array().square();
    w_h_.grad.noalias() += d_cand.transpose() * c.x;
    u_h_.grad.noalias() += d_cand.transpose() * c.reset_h;
    if (spec_.has_bias) b_h_.grad.row(0) += d_cand.colwise().sum();
    Matrix<T> d_reset_h = d_cand * u_h_.value;
    Matrix<T> dr = d_reset_h.cwiseProduct(c.h_prev);
    d_prev += d_reset_h.cwiseProduct(c.r);

    dz.array() *= c.z.array() * (T(1) - c.z.array());
    w_z_.grad.noalias() += dz.transpose() * c.x;
    u_z_.grad.noalias() += dz.transpose() * c.h_prev;
    if (spec_.has_bias) b_z_.grad.row(0) += dz.colwise().sum();
    d_prev.noalias() += dz * u_z_.value;

    dr.array() *= c.r.array() * (T(1) - c.r.array());
    w_r_.grad.noalias() += dr.transpose() * c.x;
    u_r_.grad.noalias() += dr.transpose() * c.h_prev;
    if (spec_.has_bias) b_r_.grad.row(0) += dr.colwise().sum();
    d_prev.noalias() += dr * u_r_.value;

    if (need_input_grad) {
      Matrix<T> d_x = d_cand * w_h_.value;
      d_x.noalias() += dz * w_z_.value;
      d_x.noalias() += dr * w_r_.value;
      dx[t] = std::move(d_x);
    }
    dh.topRows(n) = d_prev;
  }
  return dx;
}

template <typename T>
void Gru<T>::collect(std::vector<Parameter<T>*>& out) {
  for (auto* p : {&w_z_, &u_z_, &b_z_, &w_r_, &u_r_, &b_r_, &w_h_, &u_h_, &b_h_})
    if (p->value.size() != 0) out.push_back(p);
}

template <typename T>
void Gru<T>::collect(std::vector<const Parameter<T>*>& out) const {
  for (auto* p : {&w_z_, &u_z_, &b_z_, &w_r_, &u_r_, &b_r_, &w_h_, &u_h_, &b_h_})
    if (p->value.size() != 0) out.push_back(p);
}

// LatentMap

template <typename T>
LatentMap<T>::LatentMap(Index conversation_width, Index session_width, Index latent_width)
    : w_conv_("latent.w_conv", latent_width, conversation_width),
      b_conv_("latent.b_conv", 1, latent_width),
      w_sess_("latent.w_session", latent_width, session_width),
      b_sess_("latent.b_session", 1, latent_width) {
  if (conversation_width < 1 || session_width < 1 || latent_width < 1)
    throw ConfigError("latent map widths must be >= 1");
}

template <typename T>
void LatentMap<T>::initialize(Rng& rng) {
  glorot_uniform(w_conv_.value, rng);
  glorot_uniform(w_sess_.value, rng);
  b_conv_.value.setZero();
  b_sess_.value.setZero();
}

template <typename T>
Matrix<T> LatentMap<T>::forward_block(bool conversation, const Matrix<T>& x) const {
  const Parameter<T>& w = conversation ? w_conv_ : w_sess_;
  const Parameter<T>& b = conversation ? b_conv_ : b_sess_;
  if (x.cols() != w.value.cols())
    throw ConfigError(w.name + ": expected input width " + std::to_string(w.value.cols()) + ", got " +
                      std::to_string(x.cols()));
  Matrix<T> out = x * w.value.transpose();
  out.rowwise() += b.value.row(0);
  activate(Activation::tanh, out);
  return out;
}

template <typename T>
Matrix<T> LatentMap<T>::backward_block(bool conversation, const Matrix<T>& x, const Matrix<T>& latent,
                                       const Matrix<T>& grad_latent, bool need_input_grad) {
  Parameter<T>& w = conversation ? w_conv_ : w_sess_;
  Parameter<T>& b = conversation ? b_conv_ : b_sess_;
  Matrix<T> g = grad_latent;
  g.array() *= T(1) - latent.array().square();
  w.grad.noalias() += g.transpose() * x;
  b.grad.row(0) += g.colwise().sum();
  if (!need_input_grad) return {};
  return g * w.value;
}

template <typename T>
void LatentMap<T>::collect(std::vector<Parameter<T>*>& out) {
  for (auto* p : {&w_conv_, &b_conv_, &w_sess_, &b_sess_}) out.push_back(p);
}

template <typename T>
void LatentMap<T>::collect(std::vector<const Parameter<T>*>& out) const {
  for (auto* p : {&w_conv_, &b_conv_, &w_sess_, &b_sess_}) out.push_back(p);
}

// Single-vector reference operations

template <typename T>
Vector<T> dense_forward(const Vector<T>& x, const Matrix<T>& w, const Vector<T>& b, Activation act) {
  if (w.cols() != x.size() || w.rows() != b.size())
    throw ConfigError("dense_forward: incompatible dimensions");
  Matrix<T> y = (w * x + b).transpose();
  activate(act, y);
  return y.transpose();
}

template <typename T>
GruWeights<T> GruWeights<T>::zeros(Index input, Index hidden) {
  GruWeights<T> p;
  for (auto* w : {&p.w_z, &p.w_r, &p.w_h}) *w = Matrix<T>::Zero(hidden, input);
  for (auto* u : {&p.u_z, &p.u_r, &p.u_h}) *u = Matrix<T>::Zero(hidden, hidden);
  for (auto* b : {&p.b_z, &p.b_r, &p.b_h}) *b = Vector<T>::Zero(hidden);
  return p;
}

template <typename T>
Vector<T> gru_step(const Vector<T>& x, const Vector<T>& h_prev, const GruWeights<T>& p) {
  if (!x.allFinite() || !h_prev.allFinite()) throw NumericError("gru_step: non-finite input");
  if (p.w_z.cols() != x.size() || p.u_z.cols() != h_prev.size())
    throw ConfigError("gru_step: incompatible dimensions");
  const auto sig = [](T v) { return sigmoid(v); };
  const Vector<T> z = (p.w_z * x + p.u_z * h_prev + p.b_z).unaryExpr(sig);
  const Vector<T> r = (p.w_r * x + p.u_r * h_prev + p.b_r).unaryExpr(sig);
  const Vector<T> cand = (p.w_h * x + p.u_h * r.cwiseProduct(h_prev) + p.b_h).array().tanh().matrix();
  return (Vector<T>::Ones(z.size()) - z).cwiseProduct(h_prev) + z.cwiseProduct(cand);
}

#define MMREC_INSTANTIATE_LAYERS(T)                                                              \
  template void glorot_uniform<T>(Matrix<T>&, Rng&);                                             \
  template void orthogonal<T>(Matrix<T>&, Rng&);                                                 \
  template Matrix<T> dropout_mask<T>(Index, Index, double, Rng&);                                \
  template class Dense<T>;                                                                       \
  template class Gru<T>;                                                                         \
  template class LatentMap<T>;                                                                   \
  template Vector<T> dense_forward<T>(const Vector<T>&, const Matrix<T>&, const Vector<T>&,      \
                                      Activation);                                               \
  template struct GruWeights<T>;                                                                 \
  template Vector<T> gru_step<T>(const Vector<T>&, const Vector<T>&, const GruWeights<T>&);

MMREC_INSTANTIATE_LAYERS(float)
MMREC_INSTANTIATE_LAYERS(double)

}  // namespace mmrec::nn
