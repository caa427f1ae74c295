#include "mmrec/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "mmrec/error.hpp"
#include "mmrec/random.hpp"

namespace mmrec::data {

namespace {

struct LineDef {
  const char* base;
  double weight;
  std::vector<std::pair<const char*, double>> coverages;
};

const std::vector<LineDef>& lines() {
  static const std::vector<LineDef> defs = {
      {"car", 3.0, {{"car_roadside", 1.6}, {"car_glass", 1.1}, {"car_rental", 0.8}}},
      {"house", 2.4, {{"house_water", 1.3}, {"house_garden", 0.8}, {"house_pest", 0.7}}},
      {"contents", 2.2, {{"contents_theft", 1.2}, {"contents_electronics", 1.0}}},
      {"accident", 1.8, {{"accident_dental", 0.9}, {"accident_sports", 0.8}, {"accident_critical", 0.7}}},
      {"travel", 1.6, {{"travel_cancel", 1.0}, {"travel_luggage", 0.7}}},
      {"pet", 1.3, {{"pet_vet", 1.0}}},
      {"motorcycle", 1.0, {{"motorcycle_gear", 0.8}}},
      {"life", 1.0, {{"life_disability", 0.8}}},
  };
  return defs;
}

const std::vector<std::string> kSections = {"sec:home", "sec:login", "sec:claims", "sec:products",
                                            "sec:contact", "sec:mypage", "sec:pricing", "sec:terms"};
const std::vector<std::string> kInteractions = {"act:view", "act:click", "act:submit", "act:download"};

using Rng = std::mt19937_64;

double uniform(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }
int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

template <typename V>
const typename V::value_type& pick(Rng& rng, const V& v) {
  return v[static_cast<std::size_t>(uniform_int(rng, 0, static_cast<int>(v.size()) - 1))];
}

double round4(double x) { return std::round(x * 1e4) / 1e4; }

/// 1 + gamma-Poisson draw with the given mean and standard deviation, clipped.
int event_count(Rng& rng, double mean, double sd, int cap) {
  const double mu = mean - 1.0;
  const double var = sd * sd;
  int n = 0;
  if (mu > 0.0) {
    double lambda = mu;
    if (var > mu) {
      const double shape = mu * mu / (var - mu);
      lambda = std::gamma_distribution<double>(shape, mu / shape)(rng);
    }
    n = lambda > 0.0 ? static_cast<int>(std::poisson_distribution<long>(lambda)(rng)) : 0;
  }
  return std::clamp(1 + n, 1, cap);
}

std::vector<double> unit_vector(Rng& rng, int dim) {
  std::normal_distribution<double> g(0.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(dim));
  double norm = 0.0;
  for (double& x : v) {
    x = g(rng);
    norm += x * x;
  }
  norm = std::sqrt(norm);
  for (double& x : v) x /= norm;
  return v;
}

class Generator {
 public:
  explicit Generator(const GeneratorConfig& cfg) : cfg_(cfg), catalog_(default_catalog()) {
    const int J = catalog_.size();
    line_of_.resize(static_cast<std::size_t>(J));
    weight_.resize(static_cast<std::size_t>(J));
    int j = 0;
    for (std::size_t l = 0; l < lines().size(); ++l) {
      const LineDef& def = lines()[l];
      base_ids_.push_back(j);
      line_of_[static_cast<std::size_t>(j)] = static_cast<int>(l);
      weight_[static_cast<std::size_t>(j++)] = def.weight;
      for (const auto& cov : def.coverages) {
        line_of_[static_cast<std::size_t>(j)] = static_cast<int>(l);
        weight_[static_cast<std::size_t>(j++)] = cov.second;
      }
    }
    Rng rng(splitmix(cfg.seed ^ 0x5eed5eedULL));
    for (int i = 0; i < J; ++i) item_dir_.push_back(unit_vector(rng, cfg.embedding_dim));
    for (std::size_t l = 0; l < lines().size(); ++l) line_dir_.push_back(unit_vector(rng, cfg.embedding_dim));
    chat_dir_ = unit_vector(rng, cfg.embedding_dim);
  }

  Dataset run() {
    Dataset ds;
    ds.catalog = catalog_;
    ds.embedding_dim = cfg_.embedding_dim;
    ds.users.reserve(static_cast<std::size_t>(cfg_.users));
    for (int u = 0; u < cfg_.users; ++u) ds.users.push_back(user(u));
    return ds;
  }

 private:
  bool is_base(int j) const { return catalog_.items[static_cast<std::size_t>(j)].kind == ItemKind::base_product; }

  const std::string& name(int j) const { return catalog_.items[static_cast<std::size_t>(j)].name; }

  std::string line_tag(int j) const { return "line:" + name(base_ids_[static_cast<std::size_t>(line_of_[static_cast<std::size_t>(j)])]); }
  std::string item_tag(int j) const { return "item:" + name(j); }

  int draw_weighted(Rng& rng, const std::vector<int>& candidates) const {
    double total = 0.0;
    for (int j : candidates) total += weight_[static_cast<std::size_t>(j)];
    double x = uniform(rng) * total;
    for (int j : candidates) {
      x -= weight_[static_cast<std::size_t>(j)];
      if (x < 0.0) return j;
    }
    return candidates.back();
  }

  int distractor(Rng& rng, int intent) const {
    std::vector<int> related;
    for (int j = 0; j < catalog_.size(); ++j)
      if (j != intent && line_of_[static_cast<std::size_t>(j)] == line_of_[static_cast<std::size_t>(intent)])
        related.push_back(j);
    if (!related.empty() && uniform(rng) < cfg_.p_related_distractor) return pick(rng, related);
    std::vector<int> others;
    for (int j = 0; j < catalog_.size(); ++j)
      if (j != intent) others.push_back(j);
    return draw_weighted(rng, others);
  }

  WebSession session(Rng& rng, int topic) const {
    WebSession s;
    const int n = uniform_int(rng, cfg_.min_actions, cfg_.max_actions);
    while (static_cast<int>(s.actions.size()) < n) {
      Action a;
      const double x = uniform(rng);
      if (x < 0.45) {
        a.tags = {uniform(rng) < 0.5 ? "sec:products" : "sec:pricing", line_tag(topic)};
      } else if (x < 0.65) {
        a.tags = {uniform(rng) < 0.5 ? "sec:products" : "sec:mypage", item_tag(topic)};
      } else if (x < 0.75) {
        a.tags = {"sec:claims", line_tag(topic)};
      } else {
        a.tags = {pick(rng, kSections)};
      }
      a.tags.push_back(pick(rng, kInteractions));
      if (!s.actions.empty() && s.actions.back() == a) continue;
      s.actions.push_back(a);
      // repeated clicks on the same page
      if (uniform(rng) < 0.15 && static_cast<int>(s.actions.size()) < n) s.actions.push_back(a);
    }
    int distinct = 1;
    for (std::size_t i = 1; i < s.actions.size(); ++i) distinct += s.actions[i] == s.actions[i - 1] ? 0 : 1;
    while (distinct < cfg_.min_actions) {
      Action a{{pick(rng, kSections), pick(rng, kInteractions)}};
      if (s.actions.back() == a) continue;
      s.actions.push_back(a);
      ++distinct;
    }
    return s;
  }

  Conversation conversation(Rng& rng, int topic) const {
    Conversation c;
    const int n = uniform_int(rng, cfg_.min_sentences, cfg_.max_sentences);
    const int d = cfg_.embedding_dim;
    const auto& mu = item_dir_[static_cast<std::size_t>(topic)];
    const auto& nu = line_dir_[static_cast<std::size_t>(line_of_[static_cast<std::size_t>(topic)])];
    std::normal_distribution<double> noise(0.0, cfg_.embedding_noise);
    Speaker speaker = uniform(rng) < 0.5 ? Speaker::user : Speaker::agent;
    for (int i = 0; i < n; ++i) {
      Sentence s;
      s.speaker = speaker;
      speaker = speaker == Speaker::user ? Speaker::agent : Speaker::user;
      const double x = uniform(rng);
      double a_item = 0.0, a_line = 0.0, a_chat = 0.0;
      if (x < 0.35) {
        a_item = 1.0;
        a_line = 0.5;
        if (uniform(rng) < 0.5) s.keywords.push_back(item_tag(topic));
      } else if (x < 0.7) {
        a_line = 1.0;
        if (uniform(rng) < 0.5) s.keywords.push_back(line_tag(topic));
      } else {
        a_chat = 1.0;
        if (uniform(rng) < 0.3) s.keywords.push_back(pick(rng, kInteractions));
      }
      if (uniform(rng) < 0.1) s.keywords.push_back(pick(rng, kSections));
      s.embedding.resize(static_cast<std::size_t>(d));
      for (int k = 0; k < d; ++k) {
        const auto kk = static_cast<std::size_t>(k);
        s.embedding[kk] = round4(a_item * mu[kk] + a_line * nu[kk] + a_chat * chat_dir_[kk] + noise(rng));
      }
      c.sentences.push_back(std::move(s));
    }
    return c;
  }

  UserRecord user(int index) const {
    Rng rng(splitmix(cfg_.seed * 0x100000001b3ULL + static_cast<std::uint64_t>(index)));
    UserRecord u;
    u.id = "u" + std::to_string(index);

    std::vector<ItemId> owned;
    for (int b : base_ids_)
      if (uniform(rng) < cfg_.p_own_base) owned.push_back(b);
    std::vector<int> purchasable;
    for (int j = 0; j < catalog_.size(); ++j) {
      const CatalogItem& item = catalog_.items[static_cast<std::size_t>(j)];
      const bool ok = item.kind == ItemKind::base_product
                          ? !std::binary_search(owned.begin(), owned.end(), j)
                          : std::binary_search(owned.begin(), owned.end(), *item.base_of);
      if (ok) purchasable.push_back(j);
    }
    const int intent = draw_weighted(rng, purchasable);
    std::vector<ItemId> items = {intent};
    if (uniform(rng) < cfg_.p_second_item) {
      std::vector<int> rest;
      for (int j : purchasable)
        if (j != intent) rest.push_back(j);
      if (!rest.empty()) {
        std::vector<int> related;
        for (int j : rest)
          if (line_of_[static_cast<std::size_t>(j)] == line_of_[static_cast<std::size_t>(intent)]) related.push_back(j);
        items.push_back(!related.empty() && uniform(rng) < 0.5 ? pick(rng, related) : draw_weighted(rng, rest));
      }
    }
    std::sort(items.begin(), items.end());

    const double m = uniform(rng);
    const bool has_conv = m < cfg_.share_conversations_only + cfg_.share_both;
    const bool has_sess = m >= cfg_.share_conversations_only;
    const int n_conv = has_conv ? event_count(rng, cfg_.conversation_count_mean, cfg_.conversation_count_std,
                                              cfg_.max_events_per_modality)
                                : 0;
    const int n_sess = has_sess ? event_count(rng, cfg_.session_count_mean, cfg_.session_count_std,
                                              cfg_.max_events_per_modality)
                                : 0;
    std::vector<bool> is_conv;
    is_conv.insert(is_conv.end(), static_cast<std::size_t>(n_conv), true);
    is_conv.insert(is_conv.end(), static_cast<std::size_t>(n_sess), false);
    std::shuffle(is_conv.begin(), is_conv.end(), rng);

    const Timestamp span = cfg_.window_end - cfg_.window_start;
    u.purchase.time = cfg_.window_start + static_cast<Timestamp>(uniform(rng) * static_cast<double>(span));
    u.purchase.items = std::move(items);
    u.owned = std::move(owned);

    // events are laid out backwards from the purchase; index 0 is the most recent
    Timestamp t = u.purchase.time;
    std::vector<Event> events;
    for (std::size_t i = 0; i < is_conv.size(); ++i) {
      t -= 1 + static_cast<Timestamp>(uniform(rng) * static_cast<double>(cfg_.max_gap - 1));
      const double p_on = i == 0 ? cfg_.p_recent_on_intent : cfg_.p_earlier_on_intent;
      const int topic = uniform(rng) < p_on ? intent : distractor(rng, intent);
      Event e;
      if (is_conv[i]) {
        Conversation c = conversation(rng, topic);
        c.time = t;
        e.payload = std::move(c);
      } else {
        WebSession s = session(rng, topic);
        s.time = t;
        e.payload = std::move(s);
      }
      events.push_back(std::move(e));
    }
    std::reverse(events.begin(), events.end());
    u.events = std::move(events);
    return u;
  }

  const GeneratorConfig& cfg_;
  ItemCatalog catalog_;
  std::vector<int> base_ids_;
  std::vector<int> line_of_;
  std::vector<double> weight_;
  std::vector<std::vector<double>> item_dir_;
  std::vector<std::vector<double>> line_dir_;
  std::vector<double> chat_dir_;
};

}  // namespace

void GeneratorConfig::validate() const {
  if (users < 0) throw ConfigError("users must be non-negative");
  if (embedding_dim < 1) throw ConfigError("embedding_dim must be positive");
  for (double s : {share_conversations_only, share_sessions_only, share_both})
    if (s < 0.0 || s > 1.0) throw ConfigError("modality shares must lie in [0, 1]");
  if (std::abs(share_conversations_only + share_sessions_only + share_both - 1.0) > 1e-9)
    throw ConfigError("modality shares must sum to 1");
  if (conversation_count_mean < 1.0 || session_count_mean < 1.0)
    throw ConfigError("event count means must be at least 1");
  if (conversation_count_std < 0.0 || session_count_std < 0.0) throw ConfigError("event count std must be >= 0");
  if (max_events_per_modality < 1) throw ConfigError("max_events_per_modality must be positive");
  for (double p : {p_recent_on_intent, p_earlier_on_intent, p_related_distractor, p_second_item, p_own_base})
    if (p < 0.0 || p > 1.0) throw ConfigError("probabilities must lie in [0, 1]");
  if (min_actions < 1 || max_actions < min_actions) throw ConfigError("bad action length range");
  if (min_sentences < 1 || max_sentences < min_sentences) throw ConfigError("bad sentence length range");
  if (embedding_noise < 0.0) throw ConfigError("embedding_noise must be >= 0");
  if (window_end <= window_start) throw ConfigError("empty time window");
  if (max_gap < 2) throw ConfigError("max_gap too small");
}

ItemCatalog default_catalog() {
  ItemCatalog c;
  for (const LineDef& def : lines()) {
    const ItemId base = c.size();
    c.items.push_back({def.base, ItemKind::base_product, std::nullopt});
    for (const auto& cov : def.coverages) c.items.push_back({cov.first, ItemKind::additional_coverage, base});
  }
  return c;
}

Dataset generate_synthetic(const GeneratorConfig& cfg) {
  cfg.validate();
  return Generator(cfg).run();
}

}  // namespace mmrec::data
