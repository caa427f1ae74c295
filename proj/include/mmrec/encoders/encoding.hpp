#pragma once

#include <vector>

#include "mmrec/data/types.hpp"
#include "mmrec/encoders/vocabulary.hpp"

namespace mmrec::enc {

/// Binarizes each action over the vocabulary and max-pools across actions.
/// Out-of-vocabulary tags are ignored.
std::vector<double> encode_session(const data::WebSession& session, const Vocabulary& vocab);

/// Mean sentence embedding. Throws DataError on an empty conversation.
std::vector<double> encode_conversation_avg(const data::Conversation& conversation);

/// Shared-space binary vector: session tags, or mapped conversation keywords.
std::vector<double> encode_keywords(const data::Event& event, const Vocabulary& shared, const TagMap& map);

/// Element-wise mean of equal-width vectors.
std::vector<double> mean_of(const std::vector<std::vector<double>>& rows);
/// Element-wise maximum of equal-width vectors.
std::vector<double> max_of(const std::vector<std::vector<double>>& rows);

}  // namespace mmrec::enc
