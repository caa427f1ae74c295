#pragma once

#include <optional>
#include <vector>

#include "mmrec/data/types.hpp"
#include "mmrec/encoders/vocabulary.hpp"
#include "mmrec/models/model_kind.hpp"
#include "mmrec/nn/network.hpp"
#include "mmrec/nn/trainer.hpp"

namespace mmrec::models {

/// Mean of the user's per-conversation average embeddings.
std::optional<std::vector<double>> conversation_aggregate(const data::UserRecord& user);
/// Element-wise max of the user's session encodings.
std::optional<std::vector<double>> session_aggregate(const data::UserRecord& user, const enc::Vocabulary& vocab);

EncodedSequence single_step(std::vector<double> values);
std::vector<double> concat(const std::vector<double>& a, const std::vector<double>& b);

/// Rows of binary purchase labels.
nn::Matrix<nn::Real> label_rows(const std::vector<const data::UserRecord*>& users, int item_count);
nn::Matrix<nn::Real> to_matrix(const std::vector<std::vector<double>>& rows, nn::Index cols);
std::vector<double> row_of(const nn::Matrix<nn::Real>& m, nn::Index row);

/// Input -> first layer (GRU when recurrent, else dense ReLU, with dropout)
/// -> dense ReLU -> dense output.
nn::NetworkSpec model_spec(nn::Index input_width, bool recurrent, const Hyperparameters& h, int outputs,
                           std::optional<nn::LatentMapSpec> latent = std::nullopt,
                           nn::LossKind loss = nn::LossKind::bce_multilabel);

/// Pairs each scorable user (non-empty input) with its purchase label.
struct Examples {
  nn::LabeledData<nn::Real> data;
  std::vector<const data::UserRecord*> users;
};

Examples make_examples(const std::vector<data::UserRecord>& users,
                       const std::vector<std::optional<EncodedSequence>>& inputs, int item_count);

/// Trains `net`; an empty validation set falls back to the training set.
nn::TrainResult fit_network(nn::Network<nn::Real>& net, const nn::LabeledData<nn::Real>& train,
                            const nn::LabeledData<nn::Real>& valid, const nn::TrainConfig& cfg, const char* what);

}  // namespace mmrec::models
