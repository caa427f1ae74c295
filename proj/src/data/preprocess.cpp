#include "mmrec/data/preprocess.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <string>

#include "mmrec/error.hpp"

namespace mmrec::data {

void PreprocessConfig::validate() const {
  if (!(min_item_share >= 0.0 && min_item_share < 1.0)) throw ConfigError("min_item_share must be in [0, 1)");
  if (!(min_token_share >= 0.0 && min_token_share < 1.0)) throw ConfigError("min_token_share must be in [0, 1)");
  if (min_sentences < 1 || min_actions < 1) throw ConfigError("minimum event lengths must be positive");
  if (max_sentences < min_sentences) throw ConfigError("max_sentences below min_sentences");
  if (max_actions < min_actions) throw ConfigError("max_actions below min_actions");
  if (chain_gap <= 0) throw ConfigError("chain_gap must be positive");
  if (max_events < 1) throw ConfigError("max_events must be positive");
}

void collapse_duplicate_actions(WebSession& session) {
  auto& a = session.actions;
  a.erase(std::unique(a.begin(), a.end()), a.end());
}

void chain_events(UserRecord& user, Timestamp gap) {
  auto& ev = user.events;
  Timestamp next = user.purchase.time;
  std::size_t keep_from = ev.size();
  for (std::size_t i = ev.size(); i-- > 0;) {
    if (next - ev[i].time() > gap) break;
    next = ev[i].time();
    keep_from = i;
  }
  ev.erase(ev.begin(), ev.begin() + static_cast<std::ptrdiff_t>(keep_from));
}

namespace {

/// Drops rare items and remaps ids. Returns false when nothing was removed.
bool prune_items(Dataset& ds, double min_share, std::vector<ItemId>& removed_orig,
                 std::vector<ItemId>& orig_id) {
  const int J = ds.catalog.size();
  const std::vector<int> counts = purchase_counts(ds.users, J);
  long total = 0;
  for (int c : counts) total += c;
  std::vector<bool> keep(static_cast<std::size_t>(J), true);
  bool any = false;
  for (int j = 0; j < J; ++j) {
    if (static_cast<double>(counts[static_cast<std::size_t>(j)]) < min_share * static_cast<double>(total)) {
      keep[static_cast<std::size_t>(j)] = false;
      any = true;
    }
  }
  if (!any) return false;

  std::vector<ItemId> remap(static_cast<std::size_t>(J), -1);
  ItemCatalog catalog;
  std::vector<ItemId> new_orig;
  for (int j = 0; j < J; ++j) {
    if (!keep[static_cast<std::size_t>(j)]) {
      removed_orig.push_back(orig_id[static_cast<std::size_t>(j)]);
      continue;
    }
    remap[static_cast<std::size_t>(j)] = catalog.size();
    catalog.items.push_back(ds.catalog.items[static_cast<std::size_t>(j)]);
    new_orig.push_back(orig_id[static_cast<std::size_t>(j)]);
  }
  for (CatalogItem& item : catalog.items) {
    if (!item.base_of) continue;
    const ItemId b = remap[static_cast<std::size_t>(*item.base_of)];
    if (b < 0) {
      // the base product is gone; the coverage stands on its own
      item.kind = ItemKind::base_product;
      item.base_of.reset();
    } else {
      item.base_of = b;
    }
  }
  auto remap_list = [&](std::vector<ItemId>& ids) {
    std::vector<ItemId> out;
    for (ItemId id : ids)
      if (remap[static_cast<std::size_t>(id)] >= 0) out.push_back(remap[static_cast<std::size_t>(id)]);
    ids = std::move(out);
  };
  for (UserRecord& u : ds.users) {
    remap_list(u.purchase.items);
    if (u.owned) {
      remap_list(*u.owned);
      std::erase_if(*u.owned, [&](ItemId id) {
        return catalog.items[static_cast<std::size_t>(id)].kind != ItemKind::base_product;
      });
    }
  }
  ds.catalog = std::move(catalog);
  orig_id = std::move(new_orig);
  return true;
}

template <typename Visit>
void for_each_token(Dataset& ds, Visit&& visit) {
  for (UserRecord& u : ds.users)
    for (Event& e : u.events) {
      if (e.is_conversation()) {
        for (Sentence& s : e.conversation().sentences) visit(s.keywords, false);
      } else {
        for (Action& a : e.session().actions) visit(a.tags, true);
      }
    }
}

void prune_tokens(Dataset& ds, double min_share) {
  std::map<std::string, long> tags, keywords;
  long tag_total = 0, keyword_total = 0;
  for_each_token(ds, [&](std::vector<std::string>& tokens, bool is_tag) {
    auto& m = is_tag ? tags : keywords;
    for (const std::string& t : tokens) ++m[t];
    (is_tag ? tag_total : keyword_total) += static_cast<long>(tokens.size());
  });
  for_each_token(ds, [&](std::vector<std::string>& tokens, bool is_tag) {
    const auto& m = is_tag ? tags : keywords;
    const double floor = min_share * static_cast<double>(is_tag ? tag_total : keyword_total);
    std::erase_if(tokens, [&](const std::string& t) { return static_cast<double>(m.at(t)) < floor; });
  });
}

void clean_user(UserRecord& u, const PreprocessConfig& cfg) {
  for (Event& e : u.events)
    if (!e.is_conversation()) {
      auto& actions = e.session().actions;
      std::erase_if(actions, [](const Action& a) { return a.tags.empty(); });
      collapse_duplicate_actions(e.session());
    }
  std::erase_if(u.events, [&](const Event& e) {
    if (e.is_conversation()) return static_cast<int>(e.conversation().sentences.size()) < cfg.min_sentences;
    return static_cast<int>(e.session().actions.size()) < cfg.min_actions;
  });
  for (Event& e : u.events) {
    if (e.is_conversation()) {
      auto& s = e.conversation().sentences;
      if (static_cast<int>(s.size()) > cfg.max_sentences) s.resize(static_cast<std::size_t>(cfg.max_sentences));
    } else {
      auto& a = e.session().actions;
      if (static_cast<int>(a.size()) > cfg.max_actions) a.resize(static_cast<std::size_t>(cfg.max_actions));
    }
  }
  chain_events(u, cfg.chain_gap);
  if (static_cast<int>(u.events.size()) > cfg.max_events)
    u.events.erase(u.events.begin(), u.events.end() - cfg.max_events);
}

}  // namespace

Dataset preprocess(const Dataset& raw, const PreprocessConfig& cfg, PreprocessReport* report) {
  cfg.validate();
  raw.catalog.validate();
  Dataset ds = raw;
  PreprocessReport rep;
  rep.users_in = raw.users.size();
  std::vector<ItemId> orig_id(static_cast<std::size_t>(ds.catalog.size()));
  for (std::size_t j = 0; j < orig_id.size(); ++j) orig_id[j] = static_cast<ItemId>(j);

  for (;;) {
    ++rep.passes;
    const Dataset before = ds;
    prune_items(ds, cfg.min_item_share, rep.removed_items, orig_id);
    for (UserRecord& u : ds.users) clean_user(u, cfg);
    prune_tokens(ds, cfg.min_token_share);
    for (UserRecord& u : ds.users) clean_user(u, cfg);
    std::erase_if(ds.users, [&](const UserRecord& u) {
      if (u.purchase.items.empty()) {
        ++rep.dropped_no_items;
        return true;
      }
      if (u.events.empty()) {
        ++rep.dropped_no_events;
        return true;
      }
      return false;
    });
    if (ds == before) break;
  }
  std::sort(rep.removed_items.begin(), rep.removed_items.end());
  rep.users_out = ds.users.size();
  if (report) *report = std::move(rep);
  return ds;
}

}  // namespace mmrec::data
