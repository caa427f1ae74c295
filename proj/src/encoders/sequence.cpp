#include "mmrec/encoders/sequence.hpp"

#include <string>

#include "mmrec/encoders/encoding.hpp"
#include "mmrec/error.hpp"

namespace mmrec::enc {

std::string_view to_string(EncoderMode m) noexcept {
  switch (m) {
    case EncoderMode::keyword: return "keyword";
    case EncoderMode::latent: return "latent";
    case EncoderMode::relative: return "relative";
    case EncoderMode::session_only: return "session_only";
    case EncoderMode::conversation_only: return "conversation_only";
  }
  return "keyword";
}

EncoderMode parse_encoder_mode(std::string_view s) {
  for (EncoderMode m : {EncoderMode::keyword, EncoderMode::latent, EncoderMode::relative, EncoderMode::session_only,
                        EncoderMode::conversation_only})
    if (to_string(m) == s) return m;
  throw ConfigError("unknown encoder mode '" + std::string(s) + "'");
}

int EncoderSet::width(EncoderMode mode, Modality m) const {
  switch (mode) {
    case EncoderMode::keyword: return shared_vocab.size();
    case EncoderMode::relative:
      if (!anchors) throw ConfigError("relative mode needs fitted anchors");
      return anchors->anchors.size();
    case EncoderMode::latent:
    case EncoderMode::session_only:
    case EncoderMode::conversation_only:
      return m == Modality::conversation ? embedding_dim : session_vocab.size();
  }
  return 0;
}

EncoderSet fit_encoders(const std::vector<data::UserRecord>& train, int embedding_dim, TagMap tag_map,
                        double min_token_share) {
  EncoderSet e;
  e.embedding_dim = embedding_dim;
  e.session_vocab = fit_tag_vocabulary(train, min_token_share);
  e.shared_vocab = fit_shared_vocabulary(train, tag_map, min_token_share);
  e.tag_map = std::move(tag_map);
  return e;
}

namespace {

bool keeps(EncoderMode mode, bool conversation) {
  if (mode == EncoderMode::session_only) return !conversation;
  if (mode == EncoderMode::conversation_only) return conversation;
  return true;
}

std::vector<double> row_vector(const Eigen::MatrixXd& m, Eigen::Index row) {
  std::vector<double> v(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index k = 0; k < m.cols(); ++k) v[static_cast<std::size_t>(k)] = m(row, k);
  return v;
}

}  // namespace

std::vector<std::optional<EncodedSequence>> build_sequences(const std::vector<data::UserRecord>& users,
                                                            EncoderMode mode, const EncoderSet& encoders) {
  std::vector<std::optional<EncodedSequence>> out(users.size());
  if (mode == EncoderMode::relative) {
    if (!encoders.anchors) throw ConfigError("relative mode needs fitted anchors");
    AnchorModel& am = *encoders.anchors;
    std::vector<const data::Conversation*> convs;
    std::vector<const data::WebSession*> sessions;
    for (const data::UserRecord& u : users)
      for (const data::Event& e : u.events) {
        if (e.is_conversation()) convs.push_back(&e.conversation());
        else sessions.push_back(&e.session());
      }
    Eigen::MatrixXd conv_lat, sess_lat;
    {
      std::lock_guard<std::mutex> guard(am.lock.get());
      conv_lat = conversation_latents(am.nets, convs);
      sess_lat = session_latents(am.nets, sessions, encoders.session_vocab);
    }
    Eigen::Index ci = 0, si = 0;
    for (std::size_t i = 0; i < users.size(); ++i) {
      EncodedSequence seq;
      for (const data::Event& e : users[i].events) {
        const bool c = e.is_conversation();
        const std::vector<double> latent = c ? row_vector(conv_lat, ci++) : row_vector(sess_lat, si++);
        seq.steps.push_back({e.modality(), relative_representation(
                                               latent, c ? am.anchors.conversation : am.anchors.session)});
      }
      if (!seq.empty()) out[i] = std::move(seq);
    }
    return out;
  }
  for (std::size_t i = 0; i < users.size(); ++i) {
    EncodedSequence seq;
    for (const data::Event& e : users[i].events) {
      const bool c = e.is_conversation();
      if (!keeps(mode, c)) continue;
      if (mode == EncoderMode::keyword) {
        seq.steps.push_back({e.modality(), encode_keywords(e, encoders.shared_vocab, encoders.tag_map)});
      } else if (c) {
        std::vector<double> v = encode_conversation_avg(e.conversation());
        if (static_cast<int>(v.size()) != encoders.embedding_dim)
          throw DataError("embedding width " + std::to_string(v.size()) + " differs from fitted width " +
                          std::to_string(encoders.embedding_dim));
        seq.steps.push_back({Modality::conversation, std::move(v)});
      } else {
        seq.steps.push_back({Modality::session, encode_session(e.session(), encoders.session_vocab)});
      }
    }
    if (!seq.empty()) out[i] = std::move(seq);
  }
  return out;
}

std::optional<EncodedSequence> build_sequence(const data::UserRecord& user, EncoderMode mode,
                                              const EncoderSet& encoders) {
  return build_sequences({user}, mode, encoders).front();
}

}  // namespace mmrec::enc
