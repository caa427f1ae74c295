#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mmrec/data/types.hpp"
#include "mmrec/encoders/vocabulary.hpp"
#include "mmrec/nn/trainer.hpp"

namespace mmrec::enc {

struct AnchorConfig {
  int anchor_count = 125;
  nn::Index latent_width = 64;
  double dropout = 0.3;
  nn::TrainConfig train;  // batch 256 by default
};

/// Single-event networks, dense tanh latent -> output, one per modality.
struct AnchorNetworks {
  nn::Network<nn::Real> conversation;  // input: averaged sentence embedding
  nn::Network<nn::Real> session;       // input: max-pooled session encoding
  nn::TrainResult conversation_log;
  nn::TrainResult session_log;
};

nn::NetworkSpec anchor_network_spec(nn::Index input_width, int item_count, const AnchorConfig& cfg);

/// Trains both networks on (event, owner's purchase) pairs.
AnchorNetworks fit_anchor_networks(const std::vector<data::UserRecord>& train,
                                   const std::vector<data::UserRecord>& valid, const Vocabulary& session_vocab,
                                   int embedding_dim, int item_count, const AnchorConfig& cfg);

/// Latent vectors of single events, one row per event, in input order.
Eigen::MatrixXd conversation_latents(AnchorNetworks& nets, std::span<const data::Conversation* const> events);
Eigen::MatrixXd session_latents(AnchorNetworks& nets, std::span<const data::WebSession* const> events,
                                const Vocabulary& session_vocab);

/// Anchor users in a fixed order; row i of each matrix belongs to user_ids[i].
struct AnchorSet {
  std::vector<std::string> user_ids;
  Eigen::MatrixXd conversation;
  Eigen::MatrixXd session;

  int size() const noexcept { return static_cast<int>(user_ids.size()); }
};

/// Draws anchors from intersection users of `train`, stratified by purchased
/// item: round-robin over items by decreasing training frequency. Each
/// anchor contributes the latents of its most recent event per modality;
/// users with a zero-norm latent are skipped.
AnchorSet select_anchors(const std::vector<data::UserRecord>& train, AnchorNetworks& nets,
                         const Vocabulary& session_vocab, int item_count, int count, std::uint64_t seed);

/// Rebuilds an anchor set from stored user ids.
AnchorSet anchors_from_ids(const std::vector<data::UserRecord>& train, AnchorNetworks& nets,
                           const Vocabulary& session_vocab, const std::vector<std::string>& ids);

/// Cosine similarity, clamped to [-1, 1]; 0 when either vector is zero.
double cosine_similarity(std::span<const double> a, std::span<const double> b);

/// Cosine similarities of `latent` to every anchor row. A zero latent gives
/// the zero vector and a warning.
std::vector<double> relative_representation(std::span<const double> latent, const Eigen::MatrixXd& anchors);

}  // namespace mmrec::enc
