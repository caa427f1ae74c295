#include "mmrec/harness/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mmrec/data/dataset_io.hpp"
#include "mmrec/error.hpp"
#include "mmrec/eval/report.hpp"
#include "mmrec/log.hpp"
#include "mmrec/models/bundle_io.hpp"
#include "mmrec/parallel.hpp"

namespace mmrec::harness {

namespace fs = std::filesystem;
using models::ModelKind;

void write_text(const std::string& path, const std::string& content) {
  const fs::path p(path);
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  if (ec) throw IoError("cannot create " + p.parent_path().string() + ": " + ec.message());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("failed writing " + path);
}

PreparedData prepare_data(const ExperimentConfig& cfg) {
  cfg.validate();
  PreparedData d;
  data::Dataset raw = cfg.dataset_path.empty() ? data::generate_synthetic(cfg.generator)
                                               : data::load_dataset(cfg.dataset_path);
  d.raw_fingerprint = data::dataset_fingerprint(raw);
  if (cfg.preprocess) {
    data::PreprocessReport report;
    d.dataset = data::preprocess(raw, cfg.preprocessing, &report);
    d.preprocess_report = report;
  } else {
    d.dataset = std::move(raw);
  }
  d.fingerprint = data::dataset_fingerprint(d.dataset);
  d.split = data::chronological_split(d.dataset.users, cfg.test_fraction, cfg.valid_fraction);
  const enc::TagMap tags = cfg.tag_map_path.empty() ? enc::TagMap{} : enc::load_tag_map(cfg.tag_map_path);
  d.encoders = std::make_shared<enc::EncoderSet>(
      enc::fit_encoders(d.split.train, d.dataset.embedding_dim, tags, cfg.min_token_share));
  log_info("prepared " + std::to_string(d.dataset.users.size()) + " users (" + d.fingerprint + ")");
  return d;
}

nlohmann::json data_summary(const PreparedData& d) {
  const auto subsets = [](const std::vector<data::UserRecord>& users) {
    nlohmann::json j = {{"users", users.size()}};
    for (data::UserSubset s : {data::UserSubset::conversations_only, data::UserSubset::sessions_only,
                               data::UserSubset::intersection})
      j[std::string(data::to_string(s))] =
          std::count_if(users.begin(), users.end(), [&](const data::UserRecord& u) { return data::subset_of(u) == s; });
    return j;
  };
  nlohmann::json j = {{"raw_fingerprint", d.raw_fingerprint},
                      {"dataset_fingerprint", d.fingerprint},
                      {"items", d.dataset.catalog.size()},
                      {"embedding_dim", d.dataset.embedding_dim},
                      {"train", subsets(d.split.train)},
                      {"valid", subsets(d.split.valid)},
                      {"test", subsets(d.split.test)},
                      {"session_vocabulary", d.encoders->session_vocab.size()},
                      {"shared_vocabulary", d.encoders->shared_vocab.size()}};
  if (d.preprocess_report) {
    const data::PreprocessReport& r = *d.preprocess_report;
    j["preprocess"] = {{"users_in", r.users_in},
                       {"users_out", r.users_out},
                       {"dropped_no_events", r.dropped_no_events},
                       {"dropped_no_items", r.dropped_no_items},
                       {"removed_items", r.removed_items},
                       {"passes", r.passes}};
  }
  return j;
}

models::TrainingContext training_context(const ExperimentConfig& cfg, const PreparedData& d, std::uint64_t seed) {
  models::TrainingContext ctx;
  ctx.train = &d.split.train;
  ctx.valid = &d.split.valid;
  ctx.item_count = d.dataset.catalog.size();
  ctx.encoders = d.encoders;
  ctx.seed = seed;
  ctx.max_epochs = cfg.max_epochs;
  ctx.patience = cfg.patience;
  ctx.adam = cfg.adam;
  ctx.hyper = cfg.hyper;
  ctx.kd_alpha = cfg.kd_alpha;
  ctx.kd_beta = cfg.kd_beta;
  ctx.anchor.anchor_count = cfg.anchor_count;
  ctx.anchor.latent_width = cfg.anchor_latent_width;
  ctx.anchor.dropout = cfg.anchor_dropout;
  return ctx;
}

eval::TrainedRuns TrainedExperiment::runs(ModelKind kind) const {
  eval::TrainedRuns r;
  r.kind = kind;
  r.seeds = seeds;
  for (const models::ModelSet& s : sets) {
    const auto it = s.find(kind);
    if (it == s.end()) throw ConfigError(std::string(models::display_name(kind)) + " was not trained");
    r.models.push_back(it->second);
  }
  return r;
}

std::vector<eval::TrainedRuns> TrainedExperiment::runs(const std::vector<ModelKind>& kinds) const {
  std::vector<eval::TrainedRuns> out;
  for (ModelKind k : kinds) out.push_back(runs(k));
  return out;
}

TrainedExperiment train_experiment(const ExperimentConfig& cfg, const PreparedData& d, int workers) {
  TrainedExperiment e;
  e.seeds = cfg.seeds;
  e.sets.resize(cfg.seeds.size());
  parallel_for(cfg.seeds.size(), workers, [&](std::size_t i) {
    models::train_models(training_context(cfg, d, cfg.seeds[i]), cfg.models, e.sets[i]);
    log_info("trained seed " + std::to_string(cfg.seeds[i]));
  });
  return e;
}

std::string bundle_dir(const std::string& output_dir, std::uint64_t seed) {
  return (fs::path(output_dir) / "models" / ("seed-" + std::to_string(seed))).string();
}

std::string report_dir(const std::string& output_dir) { return (fs::path(output_dir) / "reports").string(); }

void save_experiment(const std::string& output_dir, const TrainedExperiment& e, const std::string& fingerprint,
                     RunManifest* manifest) {
  for (std::size_t i = 0; i < e.seeds.size(); ++i) {
    const std::string dir = bundle_dir(output_dir, e.seeds[i]);
    models::save_models(dir, e.sets[i], fingerprint);
    if (manifest) manifest->add_artifact(dir, "model-bundles");
  }
}

TrainedExperiment load_experiment(const std::string& output_dir, const std::vector<ModelKind>& kinds,
                                  const std::vector<std::uint64_t>& seeds, const PreparedData& d) {
  TrainedExperiment e;
  e.seeds = seeds;
  for (std::uint64_t seed : seeds) {
    const std::string dir = bundle_dir(output_dir, seed);
    for (ModelKind k : kinds)
      if (!fs::exists(fs::path(dir) / models::slug(k) / "manifest.json"))
        throw IoError("missing bundle for model " + std::string(models::slug(k)) + ", seed " + std::to_string(seed) +
                      " (expected under " + dir + ")");
    e.sets.push_back(models::load_models(dir, {d.fingerprint, d.encoders.get()}));
  }
  return e;
}

eval::EvalReport evaluate_experiment(const ExperimentConfig& cfg, const PreparedData& d, const TrainedExperiment& e) {
  const eval::EvalTarget target = eval::EvalTarget::from_users(d.split.test, d.dataset.catalog);
  std::vector<eval::ModelRuns> preds;
  for (ModelKind k : cfg.models) preds.push_back(eval::predict_runs(e.runs(k), d.split.test));
  return eval::evaluate(target, preds, cfg.ks, cfg.reference);
}

int table_cutoff(const std::vector<int>& ks) {
  if (std::find(ks.begin(), ks.end(), 3) != ks.end()) return 3;
  return *std::max_element(ks.begin(), ks.end());
}

std::vector<std::string> write_reports(const std::string& dir, const eval::EvalReport& report, int table_k) {
  const auto emit = [&](const std::string& name, auto&& writer) {
    std::ostringstream os;
    writer(os);
    const std::string path = (fs::path(dir) / name).string();
    write_text(path, os.str());
    return path;
  };
  return {emit("table.tsv", [&](std::ostream& os) { eval::write_table(os, report, table_k); }),
          emit("metrics.tsv", [&](std::ostream& os) { eval::write_long(os, report); }),
          emit("curves.tsv", [&](std::ostream& os) { eval::write_curves(os, report); })};
}

std::vector<std::string> run_ablations(const ExperimentConfig& cfg, const PreparedData& d, const TrainedExperiment& e,
                                       const eval::EvalReport& original, AblationRequest what, int workers) {
  std::vector<std::string> paths;
  const std::string dir = report_dir(cfg.output_dir);
  if (what.event_count) {
    const eval::EventCountCurve curve = eval::ablate_event_count(
        d.split.test, d.dataset.catalog, e.runs(cfg.models), cfg.ablation.event_counts, cfg.ablation.k, cfg.reference);
    std::ostringstream os;
    eval::write_event_curve(os, curve);
    paths.push_back((fs::path(dir) / "event_count.tsv").string());
    write_text(paths.back(), os.str());
  }
  if (what.order) {
    eval::OrderAblationConfig oc;
    oc.kinds = cfg.ablation.order_models;
    oc.seeds = cfg.seeds;
    oc.shuffles = cfg.ablation.order_shuffles;
    oc.shuffle_seed = cfg.ablation.shuffle_seed;
    oc.k = cfg.ablation.k;
    oc.workers = workers;
    for (ModelKind k : oc.kinds)
      if (!original.find(k))
        throw ConfigError("order ablation needs " + std::string(models::display_name(k)) + " among the evaluated models");
    if (std::find(original.ks.begin(), original.ks.end(), oc.k) == original.ks.end())
      throw ConfigError("order ablation cutoff k=" + std::to_string(oc.k) + " is not among the evaluated cutoffs");
    const eval::OrderAblation result =
        eval::ablate_event_order(training_context(cfg, d, cfg.seeds.front()), d.split.test, d.dataset.catalog,
                                 original, oc);
    std::ostringstream table, longer;
    eval::write_order_table(table, result);
    eval::write_order_long(longer, result);
    paths.push_back((fs::path(dir) / "order.tsv").string());
    write_text(paths.back(), table.str());
    paths.push_back((fs::path(dir) / "order_long.tsv").string());
    write_text(paths.back(), longer.str());
  }
  return paths;
}

}  // namespace mmrec::harness
