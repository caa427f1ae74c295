#include "mmrec/harness/config.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>
#include <thread>

#include "mmrec/error.hpp"

namespace mmrec::harness {

namespace {

using models::ModelKind;

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

/// Value text without a trailing "; comment" (a ';' at the start or after whitespace).
std::string ini_value(std::string_view s) {
  for (std::size_t i = 0; i < s.size(); ++i)
    if (s[i] == ';' && (i == 0 || s[i - 1] == ' ' || s[i - 1] == '\t')) return trim(s.substr(0, i));
  return trim(s);
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const std::string item = trim(s.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (!item.empty()) out.push_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

template <typename T>
T parse_number(const std::string& s) {
  T v{};
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw std::invalid_argument(s);
  return v;
}

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

bool parse_bool(const std::string& s) {
  std::string l = s;
  std::transform(l.begin(), l.end(), l.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (l == "true" || l == "yes" || l == "1" || l == "on") return true;
  if (l == "false" || l == "no" || l == "0" || l == "off") return false;
  throw std::invalid_argument(s);
}

template <typename T>
std::string join(const std::vector<T>& v, const std::function<std::string(const T&)>& f) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + f(v[i]);
  return out;
}

struct Field {
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

struct Section {
  std::string name;
  std::vector<Field> fields;
};

template <typename T>
Field number(std::string key, T& x) {
  return {std::move(key), [&x](const std::string& s) { x = parse_number<T>(s); },
          [&x] {
            if constexpr (std::is_floating_point_v<T>) return format_double(x);
            else return std::to_string(x);
          }};
}

Field flag(std::string key, bool& x) {
  return {std::move(key), [&x](const std::string& s) { x = parse_bool(s); }, [&x] { return std::string(x ? "true" : "false"); }};
}

Field text(std::string key, std::string& x) {
  return {std::move(key), [&x](const std::string& s) { x = s; }, [&x] { return x; }};
}

Field days(std::string key, data::Timestamp& x) {
  return {std::move(key),
          [&x](const std::string& s) { x = static_cast<data::Timestamp>(parse_number<double>(s) * data::kSecondsPerDay); },
          [&x] { return format_double(static_cast<double>(x) / data::kSecondsPerDay); }};
}

template <typename T>
Field number_list(std::string key, std::vector<T>& x) {
  return {std::move(key),
          [&x](const std::string& s) {
            x.clear();
            for (const std::string& item : split_list(s)) x.push_back(parse_number<T>(item));
          },
          [&x] {
            return join<T>(x, [](const T& v) {
              if constexpr (std::is_floating_point_v<T>) return format_double(v);
              else return std::to_string(v);
            });
          }};
}

std::vector<ModelKind> parse_kinds(const std::string& s) {
  if (trim(s) == "all") return {models::kAllModels.begin(), models::kAllModels.end()};
  std::vector<ModelKind> out;
  for (const std::string& item : split_list(s)) out.push_back(models::parse_model_kind(item));
  return out;
}

Field kinds(std::string key, std::vector<ModelKind>& x) {
  return {std::move(key), [&x](const std::string& s) { x = parse_kinds(s); },
          [&x] { return join<ModelKind>(x, [](const ModelKind& k) { return std::string(models::slug(k)); }); }};
}

Field optional_kind(std::string key, std::optional<ModelKind>& x) {
  return {std::move(key),
          [&x](const std::string& s) {
            if (s.empty() || s == "none") x.reset();
            else x = models::parse_model_kind(s);
          },
          [&x] { return x ? std::string(models::slug(*x)) : std::string("none"); }};
}

std::vector<Section> bind(ExperimentConfig& c) {
  data::GeneratorConfig& g = c.generator;
  data::PreprocessConfig& p = c.preprocessing;
  return {
      {"data",
       {text("path", c.dataset_path), text("tag_map", c.tag_map_path), flag("preprocess", c.preprocess),
        number("test_fraction", c.test_fraction), number("valid_fraction", c.valid_fraction),
        number("min_token_share", c.min_token_share)}},
      {"generator",
       {number("users", g.users), number("seed", g.seed), number("embedding_dim", g.embedding_dim),
        number("share_conversations_only", g.share_conversations_only),
        number("share_sessions_only", g.share_sessions_only), number("share_both", g.share_both),
        number("conversation_count_mean", g.conversation_count_mean),
        number("conversation_count_std", g.conversation_count_std),
        number("session_count_mean", g.session_count_mean), number("session_count_std", g.session_count_std),
        number("max_events_per_modality", g.max_events_per_modality),
        number("p_recent_on_intent", g.p_recent_on_intent), number("p_earlier_on_intent", g.p_earlier_on_intent),
        number("p_related_distractor", g.p_related_distractor), number("p_second_item", g.p_second_item),
        number("p_own_base", g.p_own_base), number("min_actions", g.min_actions),
        number("max_actions", g.max_actions), number("min_sentences", g.min_sentences),
        number("max_sentences", g.max_sentences), number("embedding_noise", g.embedding_noise),
        number("window_start", g.window_start), number("window_end", g.window_end),
        days("max_gap_days", g.max_gap)}},
      {"preprocess",
       {number("min_item_share", p.min_item_share), number("min_sentences", p.min_sentences),
        number("min_actions", p.min_actions), number("max_sentences", p.max_sentences),
        number("max_actions", p.max_actions), days("chain_gap_days", p.chain_gap),
        number("max_events", p.max_events), number("min_token_share", p.min_token_share)}},
      {"experiment",
       {kinds("models", c.models), number_list("seeds", c.seeds), number_list("ks", c.ks),
        text("output", c.output_dir), number("workers", c.workers), optional_kind("reference", c.reference)}},
      {"training",
       {number("max_epochs", c.max_epochs), number("patience", c.patience),
        number("learning_rate", c.adam.learning_rate), number("beta1", c.adam.beta1),
        number("beta2", c.adam.beta2), number("epsilon", c.adam.epsilon), number("kd_alpha", c.kd_alpha),
        number("kd_beta", c.kd_beta)}},
      {"anchors",
       {number("count", c.anchor_count), number("latent_width", c.anchor_latent_width),
        number("dropout", c.anchor_dropout)}},
      {"gridsearch",
       {number_list("batch_sizes", c.grid.batch_sizes), number_list("units", c.grid.units),
        number_list("dropouts", c.grid.dropouts), kinds("models", c.grid.models), number("seed", c.grid.seed)}},
      {"ablation",
       {number_list("event_counts", c.ablation.event_counts), number("order_shuffles", c.ablation.order_shuffles),
        number("shuffle_seed", c.ablation.shuffle_seed), kinds("order_models", c.ablation.order_models),
        number("k", c.ablation.k)}},
  };
}

constexpr std::string_view kHyperPrefix = "hyper.";

boost::property_tree::ptree read_tree(std::string_view text, const std::string& source) {
  boost::property_tree::ptree pt;
  std::istringstream in{std::string(text)};
  try {
    boost::property_tree::read_ini(in, pt);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(source + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  return pt;
}

void apply_hyper(ExperimentConfig& cfg, const std::string& section, const boost::property_tree::ptree& tree,
                 const std::string& source) {
  const ModelKind kind = models::parse_model_kind(section.substr(kHyperPrefix.size()));
  models::Hyperparameters h = cfg.hyper.count(kind) ? cfg.hyper.at(kind) : models::default_hyperparameters(kind);
  for (const auto& [key, value] : tree) {
    const std::string v = ini_value(value.data());
    try {
      if (key == "batch_size") h.batch_size = parse_number<nn::Index>(v);
      else if (key == "units") h.units = parse_number<nn::Index>(v);
      else if (key == "dropout") h.dropout = parse_number<double>(v);
      else throw ConfigError(source + ": unknown key '" + key + "' in [" + section + "]");
    } catch (const std::invalid_argument&) {
      throw ConfigError(source + ": [" + section + "] " + key + ": invalid value '" + v + "'");
    }
  }
  cfg.hyper[kind] = h;
}

void apply_tree(ExperimentConfig& cfg, const boost::property_tree::ptree& pt, const std::string& source,
                bool hyper_only) {
  std::vector<Section> sections = bind(cfg);
  std::set<std::string> seen;
  for (const auto& [name, tree] : pt) {
    if (tree.empty() && !tree.data().empty())
      throw ConfigError(source + ": key '" + name + "' is outside any section");
    if (!seen.insert(name).second) throw ConfigError(source + ": duplicate section [" + name + "]");
    if (name.rfind(kHyperPrefix, 0) == 0) {
      apply_hyper(cfg, name, tree, source);
      continue;
    }
    if (hyper_only) throw ConfigError(source + ": expected only [hyper.<model>] sections, found [" + name + "]");
    const auto sec = std::find_if(sections.begin(), sections.end(), [&](const Section& s) { return s.name == name; });
    if (sec == sections.end()) throw ConfigError(source + ": unknown section [" + name + "]");
    for (const auto& [key, value] : tree) {
      const auto f = std::find_if(sec->fields.begin(), sec->fields.end(), [&](const Field& x) { return x.key == key; });
      if (f == sec->fields.end()) throw ConfigError(source + ": unknown key '" + key + "' in [" + name + "]");
      const std::string v = ini_value(value.data());
      try {
        f->set(v);
      } catch (const std::invalid_argument&) {
        throw ConfigError(source + ": [" + name + "] " + key + ": invalid value '" + v + "'");
      } catch (const ConfigError& e) {
        throw ConfigError(source + ": [" + name + "] " + key + ": " + e.what());
      }
    }
  }
}

template <typename T>
bool distinct(std::vector<T> v) {
  std::sort(v.begin(), v.end());
  return std::adjacent_find(v.begin(), v.end()) == v.end();
}

}  // namespace

void GridConfig::validate() const {
  if (batch_sizes.empty() || units.empty() || dropouts.empty()) throw ConfigError("grid axes must be nonempty");
  for (nn::Index b : batch_sizes)
    if (b < 1) throw ConfigError("grid batch sizes must be positive");
  for (nn::Index u : units)
    if (u < 1) throw ConfigError("grid unit counts must be positive");
  for (double d : dropouts)
    if (!(d >= 0.0 && d < 1.0)) throw ConfigError("grid dropout rates must lie in [0, 1)");
  if (!distinct(batch_sizes) || !distinct(units) || !distinct(dropouts)) throw ConfigError("grid values must be distinct");
  for (ModelKind k : models)
    if (!models::has_network(k) || k == ModelKind::late_fusion)
      throw ConfigError(std::string(models::display_name(k)) + " has no hyperparameters to search");
}

void AblationSettings::validate() const {
  if (event_counts.empty()) throw ConfigError("event_counts must be nonempty");
  for (int n : event_counts)
    if (n < 1) throw ConfigError("event counts must be at least 1");
  if (order_shuffles < 1) throw ConfigError("order_shuffles must be at least 1");
  if (order_models.empty()) throw ConfigError("order_models must be nonempty");
  if (k < 1) throw ConfigError("ablation cutoff must be at least 1");
}

void ExperimentConfig::validate() const {
  generator.validate();
  preprocessing.validate();
  if (!(test_fraction > 0.0 && valid_fraction > 0.0 && test_fraction + valid_fraction < 1.0))
    throw ConfigError("split fractions must be positive and sum to less than 1");
  if (!(min_token_share >= 0.0 && min_token_share < 1.0)) throw ConfigError("min_token_share must lie in [0, 1)");
  if (models.empty()) throw ConfigError("at least one model kind is required");
  if (!distinct(models)) throw ConfigError("model kinds must be distinct");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (!distinct(seeds)) throw ConfigError("seeds must be distinct");
  if (ks.empty()) throw ConfigError("at least one cutoff is required");
  for (int k : ks)
    if (k < 1) throw ConfigError("cutoffs must be at least 1");
  if (output_dir.empty()) throw ConfigError("output directory must be set");
  if (workers < 0) throw ConfigError("workers must be non-negative");
  if (max_epochs < 1 || patience < 1) throw ConfigError("max_epochs and patience must be positive");
  if (!(adam.learning_rate > 0.0) || !(adam.beta1 >= 0.0 && adam.beta1 < 1.0) ||
      !(adam.beta2 >= 0.0 && adam.beta2 < 1.0) || !(adam.epsilon > 0.0))
    throw ConfigError("invalid Adam settings");
  if (kd_alpha < 0.0 || kd_beta < 0.0) throw ConfigError("distillation weights must be non-negative");
  if (anchor_count < 1 || anchor_latent_width < 1 || !(anchor_dropout >= 0.0 && anchor_dropout < 1.0))
    throw ConfigError("invalid anchor settings");
  for (const auto& [kind, h] : hyper)
    if (h.batch_size < 1 || h.units < 1 || !(h.dropout >= 0.0 && h.dropout < 1.0))
      throw ConfigError("invalid hyperparameters for " + std::string(models::display_name(kind)));
  grid.validate();
  ablation.validate();
}

void set_option(ExperimentConfig& cfg, const std::string& section, const std::string& key, const std::string& value) {
  std::vector<Section> sections = bind(cfg);
  const auto sec = std::find_if(sections.begin(), sections.end(), [&](const Section& s) { return s.name == section; });
  if (sec == sections.end()) throw ConfigError("unknown section [" + section + "]");
  const auto f = std::find_if(sec->fields.begin(), sec->fields.end(), [&](const Field& x) { return x.key == key; });
  if (f == sec->fields.end()) throw ConfigError("unknown key '" + key + "' in [" + section + "]");
  try {
    f->set(trim(value));
  } catch (const std::invalid_argument&) {
    throw ConfigError("[" + section + "] " + key + ": invalid value '" + value + "'");
  }
}

ExperimentConfig parse_config(std::string_view text, const std::string& source) {
  ExperimentConfig cfg;
  apply_tree(cfg, read_tree(text, source), source, false);
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open config " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void merge_hyperparameters(ExperimentConfig& cfg, std::string_view text, const std::string& source) {
  apply_tree(cfg, read_tree(text, source), source, true);
  cfg.validate();
}

std::string hyperparameters_ini(const std::map<ModelKind, models::Hyperparameters>& hyper) {
  std::string out;
  for (const auto& [kind, h] : hyper) {
    out += "[hyper." + std::string(models::slug(kind)) + "]\n";
    out += "batch_size = " + std::to_string(h.batch_size) + "\n";
    out += "units = " + std::to_string(h.units) + "\n";
    out += "dropout = " + format_double(h.dropout) + "\n\n";
  }
  return out;
}

std::string to_ini(const ExperimentConfig& cfg) {
  ExperimentConfig copy = cfg;
  std::string out;
  for (const Section& s : bind(copy)) {
    out += "[" + s.name + "]\n";
    for (const Field& f : s.fields) out += f.key + " = " + f.get() + "\n";
    out += "\n";
  }
  out += hyperparameters_ini(cfg.hyper);
  return out;
}

int resolve_workers(int configured) {
  if (configured > 0) return configured;
  if (const char* env = std::getenv("MMREC_WORKERS")) {
    try {
      const int n = parse_number<int>(trim(env));
      if (n > 0) return n;
    } catch (const std::invalid_argument&) {
    }
    throw ConfigError(std::string("MMREC_WORKERS must be a positive integer, got '") + env + "'");
  }
  return std::max(1, static_cast<int>(std::thread::hardware_concurrency()));
}

bool operator==(const ExperimentConfig& a, const ExperimentConfig& b) { return to_ini(a) == to_ini(b); }

}  // namespace mmrec::harness
