#include "mmrec/data/dataset_io.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

#include "json.hpp"
#include "mmrec/error.hpp"

namespace mmrec::data {

using nlohmann::json;

namespace {

json catalog_to_json(const ItemCatalog& catalog) {
  json items = json::array();
  for (const CatalogItem& item : catalog.items) {
    json j = {{"name", item.name}, {"kind", item.kind == ItemKind::base_product ? "base" : "coverage"}};
    if (item.base_of) j["base_of"] = *item.base_of;
    items.push_back(std::move(j));
  }
  return items;
}

json user_to_json(const UserRecord& u) {
  json events = json::array();
  for (const Event& e : u.events) {
    if (e.is_conversation()) {
      json sentences = json::array();
      for (const Sentence& s : e.conversation().sentences)
        sentences.push_back({{"speaker", s.speaker == Speaker::user ? "user" : "agent"},
                             {"embedding", s.embedding},
                             {"keywords", s.keywords}});
      events.push_back({{"type", "conversation"}, {"time", e.time()}, {"sentences", std::move(sentences)}});
    } else {
      json actions = json::array();
      for (const Action& a : e.session().actions) actions.push_back(a.tags);
      events.push_back({{"type", "session"}, {"time", e.time()}, {"actions", std::move(actions)}});
    }
  }
  json j = {{"user", u.id},
            {"purchase", {{"time", u.purchase.time}, {"items", u.purchase.items}}},
            {"events", std::move(events)}};
  if (u.owned) j["owned"] = *u.owned;
  return j;
}

class LineParser {
 public:
  LineParser(std::string source, std::size_t line) : source_(std::move(source)), line_(line) {}

  [[noreturn]] void fail(const std::string& what) const {
    throw DataError(source_ + ":" + std::to_string(line_) + ": " + what);
  }

  const json& field(const json& j, const char* key) const {
    if (!j.is_object() || !j.contains(key)) fail(std::string("missing field '") + key + "'");
    return j.at(key);
  }

  template <typename V>
  V get(const json& j, const char* what) const {
    try {
      return j.get<V>();
    } catch (const json::exception&) {
      fail(std::string("field '") + what + "' has the wrong type");
    }
  }

 private:
  std::string source_;
  std::size_t line_;
};

ItemCatalog parse_catalog(const LineParser& p, const json& items) {
  ItemCatalog catalog;
  if (!items.is_array()) p.fail("catalog must be an array");
  for (const json& j : items) {
    CatalogItem item;
    item.name = p.get<std::string>(p.field(j, "name"), "name");
    const std::string kind = p.get<std::string>(p.field(j, "kind"), "kind");
    if (kind == "base") {
      item.kind = ItemKind::base_product;
    } else if (kind == "coverage") {
      item.kind = ItemKind::additional_coverage;
      item.base_of = p.get<int>(p.field(j, "base_of"), "base_of");
    } else {
      p.fail("unknown item kind '" + kind + "'");
    }
    catalog.items.push_back(std::move(item));
  }
  try {
    catalog.validate();
  } catch (const DataError& e) {
    p.fail(e.what());
  }
  return catalog;
}

UserRecord parse_user(const LineParser& p, const json& j, const ItemCatalog& catalog, int& embedding_dim) {
  UserRecord u;
  u.id = p.get<std::string>(p.field(j, "user"), "user");
  const json& purchase = p.field(j, "purchase");
  u.purchase.time = p.get<Timestamp>(p.field(purchase, "time"), "purchase.time");
  u.purchase.items = p.get<std::vector<ItemId>>(p.field(purchase, "items"), "purchase.items");
  std::sort(u.purchase.items.begin(), u.purchase.items.end());
  if (std::adjacent_find(u.purchase.items.begin(), u.purchase.items.end()) != u.purchase.items.end())
    p.fail("purchase lists an item twice");
  if (u.purchase.items.empty()) p.fail("purchase has no items");
  for (ItemId id : u.purchase.items)
    if (id < 0 || id >= catalog.size()) p.fail("purchase item " + std::to_string(id) + " is not in the catalog");

  if (j.contains("owned")) {
    std::vector<ItemId> owned = p.get<std::vector<ItemId>>(j.at("owned"), "owned");
    std::sort(owned.begin(), owned.end());
    owned.erase(std::unique(owned.begin(), owned.end()), owned.end());
    for (ItemId id : owned)
      if (id < 0 || id >= catalog.size() || catalog.items[static_cast<std::size_t>(id)].kind != ItemKind::base_product)
        p.fail("owned item " + std::to_string(id) + " is not a base product");
    u.owned = std::move(owned);
  }

  const json& events = p.field(j, "events");
  if (!events.is_array()) p.fail("events must be an array");
  for (const json& ej : events) {
    const std::string type = p.get<std::string>(p.field(ej, "type"), "type");
    const Timestamp t = p.get<Timestamp>(p.field(ej, "time"), "time");
    if (t >= u.purchase.time) p.fail("event at " + std::to_string(t) + " is not before the purchase");
    Event e;
    if (type == "session") {
      WebSession s;
      s.time = t;
      for (const json& aj : p.field(ej, "actions")) {
        Action a{p.get<std::vector<std::string>>(aj, "actions[]")};
        if (a.tags.empty()) p.fail("action without tags");
        s.actions.push_back(std::move(a));
      }
      e.payload = std::move(s);
    } else if (type == "conversation") {
      Conversation c;
      c.time = t;
      for (const json& sj : p.field(ej, "sentences")) {
        Sentence s;
        const std::string speaker = p.get<std::string>(p.field(sj, "speaker"), "speaker");
        if (speaker != "user" && speaker != "agent") p.fail("unknown speaker '" + speaker + "'");
        s.speaker = speaker == "user" ? Speaker::user : Speaker::agent;
        s.embedding = p.get<std::vector<double>>(p.field(sj, "embedding"), "embedding");
        if (sj.contains("keywords")) s.keywords = p.get<std::vector<std::string>>(sj.at("keywords"), "keywords");
        const int width = static_cast<int>(s.embedding.size());
        if (embedding_dim == 0) embedding_dim = width;
        if (width != embedding_dim)
          p.fail("embedding width " + std::to_string(width) + " differs from dataset width " +
                 std::to_string(embedding_dim));
        c.sentences.push_back(std::move(s));
      }
      e.payload = std::move(c);
    } else {
      p.fail("unknown event type '" + type + "'");
    }
    u.events.push_back(std::move(e));
  }
  std::stable_sort(u.events.begin(), u.events.end(),
                   [](const Event& a, const Event& b) { return a.time() < b.time(); });
  return u;
}

}  // namespace

Dataset read_dataset(std::istream& is, const std::string& source_name) {
  Dataset ds;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::set<std::string> ids;
  while (std::getline(is, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const LineParser p(source_name, line_no);
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      p.fail(std::string("malformed JSON: ") + e.what());
    }
    if (!have_header) {
      if (p.get<std::string>(p.field(j, "format"), "format") != "mmrec-dataset") p.fail("not an mmrec dataset");
      const int version = p.get<int>(p.field(j, "version"), "version");
      if (version != kDatasetSchemaVersion) p.fail("unsupported schema version " + std::to_string(version));
      ds.embedding_dim = j.contains("embedding_dim") ? p.get<int>(j.at("embedding_dim"), "embedding_dim") : 0;
      ds.catalog = parse_catalog(p, p.field(j, "catalog"));
      have_header = true;
      continue;
    }
    UserRecord u = parse_user(p, j, ds.catalog, ds.embedding_dim);
    if (!ids.insert(u.id).second) p.fail("duplicate user id '" + u.id + "'");
    ds.users.push_back(std::move(u));
  }
  return ds;
}

Dataset load_dataset(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw IoError("cannot open dataset " + path);
  return read_dataset(is, path);
}

std::string serialize_dataset(const Dataset& dataset) {
  std::string out;
  const json header = {{"format", "mmrec-dataset"},
                       {"version", kDatasetSchemaVersion},
                       {"embedding_dim", dataset.embedding_dim},
                       {"catalog", catalog_to_json(dataset.catalog)}};
  out += header.dump();
  out += '\n';
  for (const UserRecord& u : dataset.users) {
    out += user_to_json(u).dump();
    out += '\n';
  }
  return out;
}

void write_dataset(std::ostream& os, const Dataset& dataset) {
  os << serialize_dataset(dataset);
  if (!os) throw IoError("dataset write failed");
}

void save_dataset(const std::string& path, const Dataset& dataset) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw IoError("cannot write dataset " + path);
  write_dataset(os, dataset);
}

std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string dataset_fingerprint(const Dataset& dataset) {
  return fnv1a_hex(serialize_dataset(dataset));
}

}  // namespace mmrec::data
