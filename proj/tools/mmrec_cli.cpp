#include <CLI11.hpp>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "mmrec/data/dataset_io.hpp"
#include "mmrec/error.hpp"
#include "mmrec/eval/export.hpp"
#include "mmrec/harness/gridsearch.hpp"
#include "mmrec/harness/pipeline.hpp"
#include "mmrec/log.hpp"

using namespace mmrec;
using namespace mmrec::harness;
namespace fs = std::filesystem;

namespace {

struct Options {
  std::string config;
  std::string hyper_file;
  std::string output;
  std::string dataset;
  std::string models;
  std::string seeds;
  std::string ks;
  int workers = 0;
  int users = 0;
  long long seed = -1;
  bool quiet = false;
  bool verbose = false;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig resolve(const Options& o) {
  ExperimentConfig cfg = o.config.empty() ? ExperimentConfig{} : load_config(o.config);
  if (!o.models.empty()) set_option(cfg, "experiment", "models", o.models);
  if (!o.seeds.empty()) set_option(cfg, "experiment", "seeds", o.seeds);
  if (!o.ks.empty()) set_option(cfg, "experiment", "ks", o.ks);
  if (!o.output.empty()) cfg.output_dir = o.output;
  if (!o.dataset.empty()) cfg.dataset_path = o.dataset;
  if (o.workers > 0) cfg.workers = o.workers;
  if (o.users > 0) cfg.generator.users = o.users;
  if (o.seed >= 0) cfg.generator.seed = static_cast<std::uint64_t>(o.seed);
  if (!o.hyper_file.empty()) merge_hyperparameters(cfg, slurp(o.hyper_file), o.hyper_file);
  cfg.validate();
  return cfg;
}

std::string manifest_path(const ExperimentConfig& cfg, const std::string& command) {
  return (fs::path(cfg.output_dir) / "manifests" / (command + ".json")).string();
}

RunManifest start_manifest(const std::string& path, const std::string& command, const ExperimentConfig& cfg) {
  RunManifest m(path, command, to_ini(cfg));
  m.write();
  return m;
}

int cmd_generate(const Options& o, const std::string& out) {
  const ExperimentConfig cfg = resolve(o);
  RunManifest m = start_manifest(out + ".manifest.json", "generate", cfg);
  data::Dataset ds;
  {
    StageTimer t(m, "generate");
    ds = data::generate_synthetic(cfg.generator);
  }
  data::save_dataset(out, ds);
  m.set("dataset_fingerprint", data::dataset_fingerprint(ds));
  m.set("users", ds.users.size());
  m.add_artifact(out, "dataset");
  m.finalize();
  std::cout << out << '\t' << data::dataset_fingerprint(ds) << '\n';
  return 0;
}

int cmd_preprocess(const Options& o, const std::string& in, const std::string& out) {
  const ExperimentConfig cfg = resolve(o);
  RunManifest m = start_manifest(out + ".manifest.json", "preprocess", cfg);
  const data::Dataset raw = data::load_dataset(in);
  data::PreprocessReport report;
  const data::Dataset ds = data::preprocess(raw, cfg.preprocessing, &report);
  data::save_dataset(out, ds);
  m.set("input", in);
  m.set("input_fingerprint", data::dataset_fingerprint(raw));
  m.set("dataset_fingerprint", data::dataset_fingerprint(ds));
  m.set("preprocess", {{"users_in", report.users_in},
                       {"users_out", report.users_out},
                       {"dropped_no_events", report.dropped_no_events},
                       {"dropped_no_items", report.dropped_no_items},
                       {"removed_items", report.removed_items},
                       {"passes", report.passes}});
  m.add_artifact(out, "dataset");
  m.finalize();
  std::cout << "users " << report.users_in << " -> " << report.users_out << '\n';
  return 0;
}

int cmd_split(const Options& o, const std::string& in, const std::string& out_dir) {
  const ExperimentConfig cfg = resolve(o);
  RunManifest m = start_manifest((fs::path(out_dir) / "split.manifest.json").string(), "split", cfg);
  const data::Dataset ds = data::load_dataset(in);
  const data::Split s = data::chronological_split(ds.users, cfg.test_fraction, cfg.valid_fraction);
  m.set("input_fingerprint", data::dataset_fingerprint(ds));
  for (const auto& [name, users] : {std::pair{"train", &s.train}, {"valid", &s.valid}, {"test", &s.test}}) {
    data::Dataset part{ds.catalog, ds.embedding_dim, *users};
    const std::string path = (fs::path(out_dir) / (std::string(name) + ".jsonl")).string();
    data::save_dataset(path, part);
    m.add_artifact(path, std::string(name) + "-split");
    std::cout << name << '\t' << users->size() << '\n';
  }
  m.finalize();
  return 0;
}

int cmd_gridsearch(const Options& o) {
  const ExperimentConfig cfg = resolve(o);
  RunManifest m = start_manifest(manifest_path(cfg, "gridsearch"), "gridsearch", cfg);
  const int workers = resolve_workers(cfg.workers);
  PreparedData d;
  {
    StageTimer t(m, "prepare");
    d = prepare_data(cfg);
  }
  m.set("data", data_summary(d));
  m.set("workers", workers);
  GridResult result;
  {
    StageTimer t(m, "gridsearch");
    result = grid_search(training_context(cfg, d, cfg.grid.seed), cfg.grid, cfg.grid.models, workers);
  }
  const std::string dir = (fs::path(cfg.output_dir) / "gridsearch").string();
  std::ostringstream grid;
  write_grid(grid, result);
  write_text((fs::path(dir) / "grid.tsv").string(), grid.str());
  write_text((fs::path(dir) / "best_hyperparameters.ini").string(), hyperparameters_ini(result.best));
  m.add_artifact((fs::path(dir) / "grid.tsv").string(), "grid");
  m.add_artifact((fs::path(dir) / "best_hyperparameters.ini").string(), "hyperparameters");
  m.finalize();
  std::cout << hyperparameters_ini(result.best);
  return 0;
}

int cmd_train(const Options& o) {
  const ExperimentConfig cfg = resolve(o);
  RunManifest m = start_manifest(manifest_path(cfg, "train"), "train", cfg);
  const int workers = resolve_workers(cfg.workers);
  PreparedData d;
  {
    StageTimer t(m, "prepare");
    d = prepare_data(cfg);
  }
  m.set("data", data_summary(d));
  m.set("workers", workers);
  TrainedExperiment e;
  {
    StageTimer t(m, "train");
    e = train_experiment(cfg, d, workers);
  }
  save_experiment(cfg.output_dir, e, d.fingerprint, &m);
  m.finalize();
  return 0;
}

eval::EvalReport evaluate_into(const ExperimentConfig& cfg, const PreparedData& d, const TrainedExperiment& e,
                               RunManifest& m) {
  eval::EvalReport report;
  {
    StageTimer t(m, "evaluate");
    report = evaluate_experiment(cfg, d, e);
  }
  for (const std::string& p : write_reports(report_dir(cfg.output_dir), report, table_cutoff(cfg.ks)))
    m.add_artifact(p, "report");
  return report;
}

int cmd_evaluate(const Options& o) {
  const ExperimentConfig cfg = resolve(o);
  RunManifest m = start_manifest(manifest_path(cfg, "evaluate"), "evaluate", cfg);
  PreparedData d;
  {
    StageTimer t(m, "prepare");
    d = prepare_data(cfg);
  }
  m.set("data", data_summary(d));
  const TrainedExperiment e = load_experiment(cfg.output_dir, cfg.models, cfg.seeds, d);
  evaluate_into(cfg, d, e, m);
  m.finalize();
  std::ifstream table((fs::path(report_dir(cfg.output_dir)) / "table.tsv").string());
  std::cout << table.rdbuf();
  return 0;
}

int cmd_ablate(const Options& o, AblationRequest what) {
  const ExperimentConfig cfg = resolve(o);
  RunManifest m = start_manifest(manifest_path(cfg, "ablate"), "ablate", cfg);
  const int workers = resolve_workers(cfg.workers);
  PreparedData d;
  {
    StageTimer t(m, "prepare");
    d = prepare_data(cfg);
  }
  m.set("data", data_summary(d));
  m.set("workers", workers);
  const TrainedExperiment e = load_experiment(cfg.output_dir, cfg.models, cfg.seeds, d);
  const eval::EvalReport original = evaluate_experiment(cfg, d, e);
  {
    StageTimer t(m, "ablate");
    for (const std::string& p : run_ablations(cfg, d, e, original, what, workers)) m.add_artifact(p, "report");
  }
  m.finalize();
  return 0;
}

int cmd_run(const Options& o, bool ablations) {
  const ExperimentConfig cfg = resolve(o);
  RunManifest m = start_manifest(manifest_path(cfg, "run"), "run", cfg);
  const int workers = resolve_workers(cfg.workers);
  PreparedData d;
  {
    StageTimer t(m, "prepare");
    d = prepare_data(cfg);
  }
  m.set("data", data_summary(d));
  m.set("workers", workers);
  TrainedExperiment e;
  {
    StageTimer t(m, "train");
    e = train_experiment(cfg, d, workers);
  }
  save_experiment(cfg.output_dir, e, d.fingerprint, &m);
  const eval::EvalReport report = evaluate_into(cfg, d, e, m);
  if (ablations) {
    StageTimer t(m, "ablate");
    for (const std::string& p : run_ablations(cfg, d, e, report, {}, workers)) m.add_artifact(p, "report");
  }
  m.finalize();
  std::ifstream table((fs::path(report_dir(cfg.output_dir)) / "table.tsv").string());
  std::cout << table.rdbuf();
  return 0;
}

int cmd_export(const Options& o, const std::string& model, long long seed, const std::string& which,
               const std::string& out) {
  ExperimentConfig cfg = resolve(o);
  const models::ModelKind kind = models::parse_model_kind(model);
  const std::uint64_t s = seed >= 0 ? static_cast<std::uint64_t>(seed) : cfg.seeds.front();
  const std::string dir = out.empty() ? (fs::path(cfg.output_dir) / "latents" /
                                         (std::string(models::slug(kind)) + "-seed-" + std::to_string(s)))
                                            .string()
                                      : out;
  RunManifest m = start_manifest((fs::path(dir) / "manifest.json").string(), "export-latents", cfg);
  const PreparedData d = prepare_data(cfg);
  m.set("data", data_summary(d));
  const TrainedExperiment e = load_experiment(cfg.output_dir, {kind}, {s}, d);
  const std::vector<data::UserRecord>* users = nullptr;
  if (which == "train") users = &d.split.train;
  else if (which == "valid") users = &d.split.valid;
  else if (which == "test") users = &d.split.test;
  else throw ConfigError("--users must be train, valid or test");
  const eval::LatentExport x = eval::export_latents(*e.sets.front().at(kind), *users, dir);
  if (x.input_rows > 0) m.add_artifact((fs::path(dir) / "inputs.tsv").string(), "latents");
  m.add_artifact((fs::path(dir) / "outputs.tsv").string(), "outputs");
  m.set("rows", {{"inputs", x.input_rows}, {"outputs", x.output_rows}});
  m.finalize();
  std::cout << dir << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-modal recommendation with missing modalities"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(MMREC_VERSION));
  Options o;
  app.add_option("-c,--config", o.config, "INI experiment configuration")->check(CLI::ExistingFile);
  app.add_option("--hyperparameters", o.hyper_file, "INI file with [hyper.<model>] sections")
      ->check(CLI::ExistingFile);
  app.add_option("-o,--output", o.output, "Output directory (overrides [experiment] output)");
  app.add_option("--dataset", o.dataset, "Dataset file (overrides [data] path)");
  app.add_option("--models", o.models, "Comma-separated model list or 'all'");
  app.add_option("--seeds", o.seeds, "Comma-separated training seeds");
  app.add_option("--ks", o.ks, "Comma-separated cutoffs");
  app.add_option("-j,--workers", o.workers, "Worker threads (default: MMREC_WORKERS or all cores)");
  app.add_flag("-q,--quiet", o.quiet, "Only print errors");
  app.add_flag("-v,--verbose", o.verbose, "Print progress");

  std::string out, in, model, which = "test";
  long long export_seed = -1;
  bool only_events = false, only_order = false, skip_ablations = false;

  auto* gen = app.add_subcommand("generate", "Generate a synthetic dataset");
  gen->add_option("--out", out, "Dataset file to write")->required();
  gen->add_option("--users", o.users, "Number of users");
  gen->add_option("--seed", o.seed, "Generator seed");

  auto* pre = app.add_subcommand("preprocess", "Clean a dataset");
  pre->add_option("--in", in, "Input dataset")->required()->check(CLI::ExistingFile);
  pre->add_option("--out", out, "Output dataset")->required();

  auto* spl = app.add_subcommand("split", "Chronological train/validation/test split");
  spl->add_option("--in", in, "Input dataset")->required()->check(CLI::ExistingFile);
  spl->add_option("--out", out, "Output directory")->required();

  auto* grid = app.add_subcommand("gridsearch", "Grid search over batch size, units and dropout");
  auto* train = app.add_subcommand("train", "Train every model for every seed and save bundles");
  auto* evaluate = app.add_subcommand("evaluate", "Evaluate saved bundles on the test split");

  auto* ablate = app.add_subcommand("ablate", "Event-count and event-order ablations");
  ablate->add_flag("--event-count-only", only_events, "Skip the order-shuffle ablation");
  ablate->add_flag("--order-only", only_order, "Skip the event-count ablation");

  auto* run = app.add_subcommand("run", "Train, evaluate and ablate in one go");
  run->add_flag("--skip-ablations", skip_ablations, "Only train and evaluate");

  auto* exp = app.add_subcommand("export-latents", "Write per-event representations and per-user outputs");
  exp->add_option("--model", model, "Model kind")->required();
  exp->add_option("--seed", export_seed, "Training seed of the bundle (default: first seed)");
  exp->add_option("--users", which, "Which split: train, valid or test");
  exp->add_option("--out", out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_code(ErrorKind::usage);
  }

  set_log_level(o.quiet ? LogLevel::quiet : o.verbose ? LogLevel::info : LogLevel::warning);
  try {
    if (*gen) return cmd_generate(o, out);
    if (*pre) return cmd_preprocess(o, in, out);
    if (*spl) return cmd_split(o, in, out);
    if (*grid) return cmd_gridsearch(o);
    if (*train) return cmd_train(o);
    if (*evaluate) return cmd_evaluate(o);
    if (*ablate) {
      if (only_events && only_order) throw ConfigError("--event-count-only and --order-only exclude each other");
      return cmd_ablate(o, {!only_order, !only_events});
    }
    if (*run) return cmd_run(o, !skip_ablations);
    if (*exp) return cmd_export(o, model, export_seed, which, out);
  } catch (const Error& e) {
    std::cerr << "mmrec: " << e.what() << '\n';
    return exit_code(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "mmrec: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
