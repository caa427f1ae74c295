#pragma once

#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "mmrec/data/types.hpp"
#include "mmrec/encoders/anchors.hpp"
#include "mmrec/encoders/vocabulary.hpp"
#include "mmrec/inference_lock.hpp"
#include "mmrec/sequence.hpp"

namespace mmrec::enc {

enum class EncoderMode { keyword, latent, relative, session_only, conversation_only };

std::string_view to_string(EncoderMode m) noexcept;
EncoderMode parse_encoder_mode(std::string_view s);

struct AnchorModel {
  AnchorNetworks nets;
  AnchorSet anchors;
  InferenceLock lock;  // held while computing latents
};

/// Everything fitted on the training split that the encoders need.
struct EncoderSet {
  int embedding_dim = 0;
  Vocabulary session_vocab;  // action tags
  Vocabulary shared_vocab;   // action tags + mapped keywords
  TagMap tag_map;
  std::shared_ptr<AnchorModel> anchors;  // relative mode only

  /// Step width in the given mode, per modality.
  int width(EncoderMode mode, Modality m) const;
};

/// Fits both vocabularies on `train`.
EncoderSet fit_encoders(const std::vector<data::UserRecord>& train, int embedding_dim, TagMap tag_map,
                        double min_token_share = 0.001);

/// One vector per event in timestamp order. Events the mode cannot encode
/// are skipped; an empty result means the user is not scorable in this mode.
/// Not thread-safe in relative mode (the anchor networks cache activations).
std::vector<std::optional<EncodedSequence>> build_sequences(const std::vector<data::UserRecord>& users,
                                                            EncoderMode mode, const EncoderSet& encoders);
std::optional<EncodedSequence> build_sequence(const data::UserRecord& user, EncoderMode mode,
                                              const EncoderSet& encoders);

}  // namespace mmrec::enc
