#include "mmrec/encoders/vocabulary.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "mmrec/data/dataset_io.hpp"
#include "mmrec/error.hpp"

namespace mmrec::enc {

Vocabulary::Vocabulary(std::vector<std::string> tokens, std::vector<long> counts)
    : tokens_(std::move(tokens)), counts_(std::move(counts)) {
  if (!counts_.empty() && counts_.size() != tokens_.size())
    throw ConfigError("vocabulary counts do not match its tokens");
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second)
      throw ConfigError("duplicate vocabulary token '" + tokens_[i] + "'");
}

Vocabulary Vocabulary::fit(const std::map<std::string, long>& counts, double min_share) {
  if (!(min_share >= 0.0 && min_share < 1.0)) throw ConfigError("vocabulary min_share must be in [0, 1)");
  long total = 0;
  for (const auto& [token, n] : counts) total += n;
  std::vector<std::string> tokens;
  std::vector<long> kept;
  for (const auto& [token, n] : counts)
    if (n > 0 && static_cast<double>(n) >= min_share * static_cast<double>(total)) {
      tokens.push_back(token);
      kept.push_back(n);
    }
  return Vocabulary(std::move(tokens), std::move(kept));
}

std::optional<int> Vocabulary::index(std::string_view token) const {
  const auto it = index_.find(std::string(token));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string Vocabulary::hash() const {
  std::string joined;
  for (const std::string& t : tokens_) {
    joined += t;
    joined += '\n';
  }
  return data::fnv1a_hex(joined);
}

TagMap TagMap::from_pairs(std::vector<std::pair<std::string, std::string>> pairs) {
  TagMap m;
  m.explicit_ = true;
  for (auto& [k, v] : pairs) {
    const auto [it, inserted] = m.entries_.emplace(k, v);
    if (!inserted && it->second != v) throw ConfigError("tag map lists keyword '" + k + "' twice");
  }
  return m;
}

std::optional<std::string_view> TagMap::map(std::string_view keyword) const {
  if (!explicit_) return keyword;
  const auto it = entries_.find(keyword);
  if (it == entries_.end()) return std::nullopt;
  return std::string_view(it->second);
}

std::string TagMap::hash() const {
  if (!explicit_) return "identity";
  std::string joined;
  for (const auto& [k, v] : entries_) joined += k + '\t' + v + '\n';
  return data::fnv1a_hex(joined);
}

TagMap parse_tag_map(std::string_view text, const std::string& source_name) {
  std::vector<std::pair<std::string, std::string>> pairs;
  std::istringstream is{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    std::string from, to, extra;
    if (!(fields >> from)) continue;
    if (!(fields >> to) || (fields >> extra))
      throw DataError(source_name + ":" + std::to_string(line_no) + ": expected 'keyword token'");
    pairs.emplace_back(std::move(from), std::move(to));
  }
  return TagMap::from_pairs(std::move(pairs));
}

TagMap load_tag_map(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open tag map " + path);
  std::stringstream ss;
  ss << is.rdbuf();
  return parse_tag_map(ss.str(), path);
}

namespace {

void count_tags(const std::vector<data::UserRecord>& users, std::map<std::string, long>& counts) {
  for (const data::UserRecord& u : users)
    for (const data::Event& e : u.events)
      if (!e.is_conversation())
        for (const data::Action& a : e.session().actions)
          for (const std::string& t : a.tags) ++counts[t];
}

}  // namespace

Vocabulary fit_tag_vocabulary(const std::vector<data::UserRecord>& users, double min_share) {
  std::map<std::string, long> counts;
  count_tags(users, counts);
  return Vocabulary::fit(counts, min_share);
}

Vocabulary fit_shared_vocabulary(const std::vector<data::UserRecord>& users, const TagMap& map, double min_share) {
  std::map<std::string, long> counts;
  count_tags(users, counts);
  for (const data::UserRecord& u : users)
    for (const data::Event& e : u.events)
      if (e.is_conversation())
        for (const data::Sentence& s : e.conversation().sentences)
          for (const std::string& k : s.keywords)
            if (const auto token = map.map(k)) ++counts[std::string(*token)];
  return Vocabulary::fit(counts, min_share);
}

}  // namespace mmrec::enc
