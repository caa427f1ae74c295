#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "mmrec/sequence.hpp"

namespace mmrec::data {

/// Seconds since the Unix epoch.
using Timestamp = std::int64_t;
inline constexpr Timestamp kSecondsPerDay = 86400;

using ItemId = int;

/// An action is an ordered set of tags (section, object, interaction kind).
struct Action {
  std::vector<std::string> tags;

  friend bool operator==(const Action&, const Action&) = default;
};

struct WebSession {
  Timestamp time = 0;
  std::vector<Action> actions;

  friend bool operator==(const WebSession&, const WebSession&) = default;
};

enum class Speaker { user, agent };

struct Sentence {
  Speaker speaker = Speaker::user;
  std::vector<double> embedding;
  std::vector<std::string> keywords;

  friend bool operator==(const Sentence&, const Sentence&) = default;
};

struct Conversation {
  Timestamp time = 0;
  std::vector<Sentence> sentences;

  friend bool operator==(const Conversation&, const Conversation&) = default;
};

/// One interaction episode: exactly one of a conversation or a web session.
struct Event {
  std::variant<Conversation, WebSession> payload;

  Timestamp time() const;
  Modality modality() const noexcept;
  bool is_conversation() const noexcept { return std::holds_alternative<Conversation>(payload); }
  const Conversation& conversation() const { return std::get<Conversation>(payload); }
  const WebSession& session() const { return std::get<WebSession>(payload); }
  Conversation& conversation() { return std::get<Conversation>(payload); }
  WebSession& session() { return std::get<WebSession>(payload); }
  void set_time(Timestamp t);

  friend bool operator==(const Event&, const Event&) = default;
};

struct Purchase {
  Timestamp time = 0;
  std::vector<ItemId> items;  // sorted, unique

  /// Binary label vector of length `item_count`.
  std::vector<double> label(int item_count) const;

  friend bool operator==(const Purchase&, const Purchase&) = default;
};

struct UserRecord {
  std::string id;
  std::vector<Event> events;  // chronological
  Purchase purchase;
  std::optional<std::vector<ItemId>> owned;  // base products held before the purchase, if known

  int conversation_count() const noexcept;
  int session_count() const noexcept;

  friend bool operator==(const UserRecord&, const UserRecord&) = default;
};

enum class ItemKind { base_product, additional_coverage };

struct CatalogItem {
  std::string name;
  ItemKind kind = ItemKind::base_product;
  std::optional<ItemId> base_of;  // set for additional coverages

  friend bool operator==(const CatalogItem&, const CatalogItem&) = default;
};

struct ItemCatalog {
  std::vector<CatalogItem> items;

  int size() const noexcept { return static_cast<int>(items.size()); }
  /// Every additional coverage must reference an existing base product.
  void validate() const;

  friend bool operator==(const ItemCatalog&, const ItemCatalog&) = default;
};

struct Dataset {
  ItemCatalog catalog;
  int embedding_dim = 0;  // 0 when the dataset holds no conversations
  std::vector<UserRecord> users;

  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Test-user subsets by which modalities appear in the history.
enum class UserSubset { conversations_only, sessions_only, intersection };

std::string_view to_string(UserSubset s) noexcept;
UserSubset subset_of(const UserRecord& user);

/// Number of users who bought each item.
std::vector<int> purchase_counts(const std::vector<UserRecord>& users, int item_count);

}  // namespace mmrec::data
