#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mmrec/error.hpp"
#include "mmrec/harness/gridsearch.hpp"
#include "mmrec/harness/pipeline.hpp"
#include "mmrec/log.hpp"

using namespace mmrec;
using namespace mmrec::harness;
using models::ModelKind;
namespace fs = std::filesystem;

namespace {

ExperimentConfig small_config(const std::string& out) {
  ExperimentConfig c;
  c.generator.users = 1200;
  c.generator.seed = 4;
  c.seeds = {1, 2};
  c.max_epochs = 3;
  c.anchor_count = 30;
  c.ablation.order_shuffles = 2;
  c.ablation.event_counts = {1, 3};
  c.output_dir = out;
  return c;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config defaults reproduce the reference experiment") {
  const ExperimentConfig c = parse_config("");
  CHECK(c.seeds == std::vector<std::uint64_t>{1, 2, 3, 4, 5});
  CHECK(c.ks == std::vector<int>{1, 2, 3, 4, 5});
  CHECK(c.models.size() == 10);
  CHECK(c.generator.users == 10000);
  CHECK(c.grid.size() == 36);
  CHECK(c.grid.batch_sizes == std::vector<nn::Index>{64, 128, 256, 512});
  CHECK(c.reference == ModelKind::latent_feature);
  CHECK(c.preprocessing.chain_gap == 14 * data::kSecondsPerDay);
  CHECK(c.hyper.empty());
}

TEST_CASE("config parsing and round trip") {
  const ExperimentConfig c = parse_config(R"(
; comment
[experiment]
models = conversation, web_session, Late Fusion
seeds = 3,1
ks = 3
reference = none

[training]
learning_rate = 0.002
max_epochs = 7

[preprocess]
chain_gap_days = 7.5

[hyper.latent_feature]
units = 64
)");
  CHECK(c.models == std::vector<ModelKind>{ModelKind::conversation, ModelKind::web_session, ModelKind::late_fusion});
  CHECK(c.seeds == std::vector<std::uint64_t>{3, 1});
  CHECK_FALSE(c.reference.has_value());
  CHECK(c.adam.learning_rate == 0.002);
  CHECK(c.preprocessing.chain_gap == 7 * data::kSecondsPerDay + data::kSecondsPerDay / 2);
  CHECK(c.hyper.at(ModelKind::latent_feature) == models::Hyperparameters{512, 64, 0.3});
  CHECK(parse_config(to_ini(c)) == c);
  CHECK(to_ini(parse_config(to_ini(c))) == to_ini(c));
  const ExperimentConfig d = parse_config("");
  CHECK(parse_config(to_ini(d)) == d);
  CHECK_FALSE(c == d);
}

TEST_CASE("inline comments are stripped from values") {
  const ExperimentConfig c = parse_config("[data]\npath = ; generate\n[experiment]\nseeds = 2,3 ; two seeds\n"
                                          "output = runs/a;b\n[hyper.keyword]\nunits = 64\t; small\n");
  CHECK(c.dataset_path.empty());
  CHECK(c.seeds == std::vector<std::uint64_t>{2, 3});
  CHECK(c.output_dir == "runs/a;b");
  CHECK(c.hyper.at(ModelKind::keyword).units == 64);
}

TEST_CASE("config errors") {
  CHECK_THROWS_AS(parse_config("[training]\nmax_epoch = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[nonsense]\na = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[training]\nmax_epochs = three\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[training]\nmax_epochs = 0\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[experiment]\nseeds = 1,1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[experiment]\nseeds =\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[experiment]\nmodels = popular,popular\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[experiment]\nmodels = nope\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[hyper.popular_x]\nunits = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[hyper.keyword]\nlayers = 3\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[hyper.keyword]\ndropout = 1.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[gridsearch]\nmodels = late_fusion\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[data]\ntest_fraction = 0.6\nvalid_fraction = 0.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[generator]\nshare_both = 0.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[training\n"), ConfigError);
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), IoError);
  try {
    parse_config("[anchors]\nwidth = 3\n", "exp.ini");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("exp.ini") != std::string::npos);
  }
}

TEST_CASE("hyperparameter files merge") {
  ExperimentConfig c = parse_config("");
  const std::map<ModelKind, models::Hyperparameters> best = {{ModelKind::keyword, {128, 64, 0.4}},
                                                              {ModelKind::conversation, {64, 256, 0.2}}};
  merge_hyperparameters(c, hyperparameters_ini(best), "best.ini");
  CHECK(c.hyper == best);
  CHECK_THROWS_AS(merge_hyperparameters(c, "[training]\nmax_epochs = 3\n", "best.ini"), ConfigError);
  set_option(c, "experiment", "ks", "1, 3");
  CHECK(c.ks == std::vector<int>{1, 3});
  CHECK_THROWS_AS(set_option(c, "experiment", "kss", "1"), ConfigError);
}

TEST_CASE("worker resolution") {
  CHECK(resolve_workers(3) == 3);
  ::setenv("MMREC_WORKERS", "2", 1);
  CHECK(resolve_workers(0) == 2);
  ::setenv("MMREC_WORKERS", "zero", 1);
  CHECK_THROWS_AS(resolve_workers(0), ConfigError);
  ::unsetenv("MMREC_WORKERS");
  CHECK(resolve_workers(0) >= 1);
}

TEST_CASE("manifest lifecycle") {
  const fs::path dir = fs::temp_directory_path() / "mmrec_test_manifest";
  fs::remove_all(dir);
  RunManifest m((dir / "m.json").string(), "train", "[x]\n");
  m.write();
  CHECK(nlohmann::json::parse(slurp(dir / "m.json"))["status"] == "running");
  m.add_artifact("a.tsv", "report");
  m.add_timing("train", 1.5);
  m.add_timing("train", 0.5);
  m.set("data", {{"users", 3}});
  m.finalize();
  const auto j = nlohmann::json::parse(slurp(dir / "m.json"));
  CHECK(j["status"] == "complete");
  CHECK(j["timings"]["train"] == 2.0);
  CHECK(j["artifacts"].size() == 1);
  CHECK(j["config"] == "[x]\n");
  CHECK_THROWS_AS(m.add_artifact("b", "c"), UsageError);
  fs::remove_all(dir);
}

TEST_CASE("grid search logs every cell and picks the minimum") {
  set_log_level(LogLevel::quiet);
  ExperimentConfig cfg = small_config("unused");
  const PreparedData d = prepare_data(cfg);
  GridConfig grid;
  grid.batch_sizes = {64, 128};
  grid.units = {16};
  grid.dropouts = {0.2, 0.4};
  const models::TrainingContext ctx = training_context(cfg, d, 1);
  const GridResult r = grid_search(ctx, grid, {ModelKind::conversation, ModelKind::knowledge_distillation}, 2);
  CHECK(r.cells.size() == 2 * grid.size());
  for (ModelKind k : {ModelKind::conversation, ModelKind::knowledge_distillation}) {
    double best = 1e300;
    for (const GridCell& c : r.cells)
      if (c.kind == k) best = std::min(best, c.valid_loss);
    for (const GridCell& c : r.cells)
      if (c.kind == k && c.hyper == r.best.at(k)) CHECK(c.valid_loss == best);
  }
  const GridResult again = grid_search(ctx, grid, {ModelKind::conversation, ModelKind::knowledge_distillation}, 1);
  std::ostringstream a, b;
  write_grid(a, r);
  write_grid(b, again);
  CHECK(a.str() == b.str());
  std::size_t selected = 0;
  std::istringstream rows(a.str());
  std::string line;
  while (std::getline(rows, line)) selected += line.size() > 1 && line.back() == '1' && line[line.size() - 2] == '\t';
  CHECK(selected == 2);
  CHECK_THROWS_AS(grid_search(ctx, grid, {ModelKind::popular}, 1), ConfigError);
}

TEST_CASE("pipeline saves, reloads and reproduces reports") {
  set_log_level(LogLevel::quiet);
  const fs::path dir = fs::temp_directory_path() / "mmrec_test_pipeline";
  fs::remove_all(dir);
  ExperimentConfig cfg = small_config(dir.string());
  const PreparedData d = prepare_data(cfg);
  CHECK(d.split.train.size() + d.split.valid.size() + d.split.test.size() == d.dataset.users.size());
  CHECK(data_summary(d)["dataset_fingerprint"] == d.fingerprint);

  const TrainedExperiment e = train_experiment(cfg, d, 2);
  save_experiment(cfg.output_dir, e, d.fingerprint);
  const eval::EvalReport report = evaluate_experiment(cfg, d, e);
  const auto paths = write_reports(report_dir(cfg.output_dir), report, table_cutoff(cfg.ks));
  CHECK(paths.size() == 3);
  const std::string table = slurp(paths[0]);

  const TrainedExperiment loaded = load_experiment(cfg.output_dir, cfg.models, cfg.seeds, d);
  write_reports(report_dir(cfg.output_dir), evaluate_experiment(cfg, d, loaded), 3);
  CHECK(slurp(paths[0]) == table);

  const auto ablations = run_ablations(cfg, d, loaded, report, {}, 2);
  CHECK(ablations.size() == 3);
  for (const auto& p : ablations) CHECK(fs::exists(p));

  try {
    load_experiment(cfg.output_dir, cfg.models, {1, 7}, d);
    FAIL("expected a missing bundle error");
  } catch (const IoError& err) {
    CHECK(std::string(err.what()).find("seed 7") != std::string::npos);
    CHECK(std::string(err.what()).find("popular") != std::string::npos);
  }
  ExperimentConfig other = cfg;
  other.generator.seed = 5;
  CHECK_THROWS_AS(load_experiment(cfg.output_dir, cfg.models, cfg.seeds, prepare_data(other)), ConfigError);
  CHECK(table_cutoff({1, 2}) == 2);
  fs::remove_all(dir);
}

TEST_CASE("generator seeds give different content hashes") {
  ExperimentConfig a = small_config("x"), b = small_config("x");
  b.generator.seed = 99;
  CHECK(prepare_data(a).raw_fingerprint != prepare_data(b).raw_fingerprint);
  CHECK(prepare_data(a).fingerprint == prepare_data(a).fingerprint);
}
