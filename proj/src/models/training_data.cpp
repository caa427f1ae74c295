#include "mmrec/models/training_data.hpp"

#include <string>

#include "mmrec/encoders/encoding.hpp"
#include "mmrec/error.hpp"
#include "mmrec/log.hpp"

namespace mmrec::models {

using nn::Index;
using nn::Real;

std::optional<std::vector<double>> conversation_aggregate(const data::UserRecord& user) {
  std::vector<std::vector<double>> rows;
  for (const data::Event& e : user.events)
    if (e.is_conversation()) rows.push_back(enc::encode_conversation_avg(e.conversation()));
  if (rows.empty()) return std::nullopt;
  return enc::mean_of(rows);
}

std::optional<std::vector<double>> session_aggregate(const data::UserRecord& user, const enc::Vocabulary& vocab) {
  std::vector<std::vector<double>> rows;
  for (const data::Event& e : user.events)
    if (!e.is_conversation()) rows.push_back(enc::encode_session(e.session(), vocab));
  if (rows.empty()) return std::nullopt;
  return enc::max_of(rows);
}

EncodedSequence single_step(std::vector<double> values) {
  EncodedSequence s;
  s.steps.push_back({Modality::session, std::move(values)});
  return s;
}

std::vector<double> concat(const std::vector<double>& a, const std::vector<double>& b) {
  std::vector<double> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

nn::Matrix<Real> label_rows(const std::vector<const data::UserRecord*>& users, int item_count) {
  nn::Matrix<Real> m = nn::Matrix<Real>::Zero(static_cast<Index>(users.size()), item_count);
  for (std::size_t i = 0; i < users.size(); ++i)
    for (data::ItemId j : users[i]->purchase.items) {
      if (j < 0 || j >= item_count) throw DataError("purchase item outside the catalog");
      m(static_cast<Index>(i), j) = Real(1);
    }
  return m;
}

nn::Matrix<Real> to_matrix(const std::vector<std::vector<double>>& rows, Index cols) {
  nn::Matrix<Real> m(static_cast<Index>(rows.size()), cols);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (static_cast<Index>(rows[i].size()) != cols) throw DataError("row width mismatch");
    for (Index k = 0; k < cols; ++k) m(static_cast<Index>(i), k) = static_cast<Real>(rows[i][static_cast<std::size_t>(k)]);
  }
  return m;
}

std::vector<double> row_of(const nn::Matrix<Real>& m, Index row) {
  std::vector<double> v(static_cast<std::size_t>(m.cols()));
  for (Index k = 0; k < m.cols(); ++k) v[static_cast<std::size_t>(k)] = static_cast<double>(m(row, k));
  return v;
}

nn::NetworkSpec model_spec(Index input_width, bool recurrent, const Hyperparameters& h, int outputs,
                           std::optional<nn::LatentMapSpec> latent, nn::LossKind loss) {
  nn::NetworkSpec spec;
  spec.input_width = input_width;
  spec.latent_map = latent;
  spec.loss = loss;
  const Index first_in = latent ? latent->latent_width : input_width;
  if (recurrent)
    spec.layers.push_back({nn::LayerKind::gru, first_in, h.units, nn::Activation::tanh, h.dropout, true});
  else
    spec.layers.push_back({nn::LayerKind::dense, first_in, h.units, nn::Activation::relu, h.dropout, true});
  spec.layers.push_back({nn::LayerKind::dense, h.units, h.units, nn::Activation::relu, 0.0, true});
  spec.layers.push_back({nn::LayerKind::dense, h.units, outputs, nn::Activation::identity, 0.0, true});
  spec.validate();
  return spec;
}

Examples make_examples(const std::vector<data::UserRecord>& users,
                       const std::vector<std::optional<EncodedSequence>>& inputs, int item_count) {
  Examples ex;
  for (std::size_t i = 0; i < users.size(); ++i)
    if (inputs[i]) {
      ex.data.inputs.push_back(*inputs[i]);
      ex.users.push_back(&users[i]);
    }
  ex.data.targets = label_rows(ex.users, item_count);
  return ex;
}

nn::TrainResult fit_network(nn::Network<Real>& net, const nn::LabeledData<Real>& train,
                            const nn::LabeledData<Real>& valid, const nn::TrainConfig& cfg, const char* what) {
  if (train.size() == 0) throw TrainingError(std::string("no training examples for ") + what);
  if (valid.size() == 0) {
    log_warning(std::string("no validation examples for ") + what + "; validating on the training set");
    return nn::train(net, train, train, cfg);
  }
  return nn::train(net, train, valid, cfg);
}

}  // namespace mmrec::models
