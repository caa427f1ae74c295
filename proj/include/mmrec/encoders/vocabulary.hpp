#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mmrec/data/types.hpp"

namespace mmrec::enc {

/// Ordered token list with an index map. Tokens are sorted
/// lexicographically so the layout does not depend on input order.
class Vocabulary {
 public:
  Vocabulary() = default;
  /// Tokens must be unique; counts (optional) align with tokens.
  explicit Vocabulary(std::vector<std::string> tokens, std::vector<long> counts = {});

  /// Keeps tokens whose share of all occurrences is at least `min_share`.
  static Vocabulary fit(const std::map<std::string, long>& counts, double min_share);

  int size() const noexcept { return static_cast<int>(tokens_.size()); }
  std::optional<int> index(std::string_view token) const;
  const std::vector<std::string>& tokens() const noexcept { return tokens_; }
  const std::vector<long>& counts() const noexcept { return counts_; }
  std::string hash() const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::vector<long> counts_;
  std::unordered_map<std::string, int> index_;
};

/// Keyword -> shared token map. The default is the identity; a loaded map
/// drops every keyword it does not list.
class TagMap {
 public:
  TagMap() = default;
  static TagMap from_pairs(std::vector<std::pair<std::string, std::string>> pairs);

  bool identity() const noexcept { return !explicit_; }
  std::optional<std::string_view> map(std::string_view keyword) const;
  const std::map<std::string, std::string, std::less<>>& entries() const noexcept { return entries_; }
  std::string hash() const;

 private:
  bool explicit_ = false;
  std::map<std::string, std::string, std::less<>> entries_;
};

/// Reads "keyword token" lines; blank lines and '#' comments are skipped.
TagMap load_tag_map(const std::string& path);
TagMap parse_tag_map(std::string_view text, const std::string& source_name = "<tag map>");

/// Session tags only.
Vocabulary fit_tag_vocabulary(const std::vector<data::UserRecord>& users, double min_share);
/// Session tags plus mapped conversation keywords, counted together.
Vocabulary fit_shared_vocabulary(const std::vector<data::UserRecord>& users, const TagMap& map, double min_share);

}  // namespace mmrec::enc
