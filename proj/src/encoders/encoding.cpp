#include "mmrec/encoders/encoding.hpp"

#include <algorithm>

#include "mmrec/error.hpp"

namespace mmrec::enc {

std::vector<double> encode_session(const data::WebSession& session, const Vocabulary& vocab) {
  std::vector<double> v(static_cast<std::size_t>(vocab.size()), 0.0);
  for (const data::Action& a : session.actions)
    for (const std::string& tag : a.tags)
      if (const auto i = vocab.index(tag)) v[static_cast<std::size_t>(*i)] = 1.0;
  return v;
}

std::vector<double> encode_conversation_avg(const data::Conversation& conversation) {
  if (conversation.sentences.empty()) throw DataError("cannot encode an empty conversation");
  std::vector<std::vector<double>> rows;
  rows.reserve(conversation.sentences.size());
  for (const data::Sentence& s : conversation.sentences) rows.push_back(s.embedding);
  return mean_of(rows);
}

std::vector<double> encode_keywords(const data::Event& event, const Vocabulary& shared, const TagMap& map) {
  if (!event.is_conversation()) return encode_session(event.session(), shared);
  std::vector<double> v(static_cast<std::size_t>(shared.size()), 0.0);
  for (const data::Sentence& s : event.conversation().sentences)
    for (const std::string& k : s.keywords)
      if (const auto token = map.map(k))
        if (const auto i = shared.index(*token)) v[static_cast<std::size_t>(*i)] = 1.0;
  return v;
}

std::vector<double> mean_of(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw DataError("mean of no vectors");
  std::vector<double> m(rows.front().size(), 0.0);
  for (const auto& r : rows) {
    if (r.size() != m.size()) throw DataError("vectors of different widths");
    for (std::size_t k = 0; k < m.size(); ++k) m[k] += r[k];
  }
  for (double& x : m) x /= static_cast<double>(rows.size());
  return m;
}

std::vector<double> max_of(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) throw DataError("max of no vectors");
  std::vector<double> m = rows.front();
  for (const auto& r : rows) {
    if (r.size() != m.size()) throw DataError("vectors of different widths");
    for (std::size_t k = 0; k < m.size(); ++k) m[k] = std::max(m[k], r[k]);
  }
  return m;
}

}  // namespace mmrec::enc
