#include "mmrec/data/types.hpp"

#include "mmrec/error.hpp"

namespace mmrec::data {

Timestamp Event::time() const {
  return std::visit([](const auto& e) { return e.time; }, payload);
}

Modality Event::modality() const noexcept {
  return is_conversation() ? Modality::conversation : Modality::session;
}

void Event::set_time(Timestamp t) {
  std::visit([t](auto& e) { e.time = t; }, payload);
}

std::vector<double> Purchase::label(int item_count) const {
  std::vector<double> p(static_cast<std::size_t>(item_count), 0.0);
  for (ItemId id : items) {
    if (id < 0 || id >= item_count) throw DataError("purchase item " + std::to_string(id) + " outside catalog");
    p[static_cast<std::size_t>(id)] = 1.0;
  }
  return p;
}

int UserRecord::conversation_count() const noexcept {
  int n = 0;
  for (const Event& e : events) n += e.is_conversation() ? 1 : 0;
  return n;
}

int UserRecord::session_count() const noexcept {
  return static_cast<int>(events.size()) - conversation_count();
}

void ItemCatalog::validate() const {
  for (std::size_t i = 0; i < items.size(); ++i) {
    const CatalogItem& item = items[i];
    if (item.kind == ItemKind::base_product) {
      if (item.base_of) throw DataError("base product '" + item.name + "' must not reference a base");
      continue;
    }
    if (!item.base_of) throw DataError("coverage '" + item.name + "' has no base product");
    const ItemId b = *item.base_of;
    if (b < 0 || b >= size() || items[static_cast<std::size_t>(b)].kind != ItemKind::base_product)
      throw DataError("coverage '" + item.name + "' references a missing base product");
  }
}

std::string_view to_string(UserSubset s) noexcept {
  switch (s) {
    case UserSubset::conversations_only: return "conversations_only";
    case UserSubset::sessions_only: return "web_sessions_only";
    case UserSubset::intersection: return "intersection";
  }
  return "intersection";
}

UserSubset subset_of(const UserRecord& user) {
  const int conv = user.conversation_count();
  const int sess = user.session_count();
  if (conv > 0 && sess > 0) return UserSubset::intersection;
  if (conv > 0) return UserSubset::conversations_only;
  if (sess > 0) return UserSubset::sessions_only;
  throw DataError("user '" + user.id + "' has no events");
}

std::vector<int> purchase_counts(const std::vector<UserRecord>& users, int item_count) {
  std::vector<int> counts(static_cast<std::size_t>(item_count), 0);
  for (const UserRecord& u : users)
    for (ItemId id : u.purchase.items)
      if (id >= 0 && id < item_count) ++counts[static_cast<std::size_t>(id)];
  return counts;
}

}  // namespace mmrec::data
