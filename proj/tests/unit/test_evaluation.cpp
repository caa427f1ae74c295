#include <doctest.h>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "mmrec/data/preprocess.hpp"
#include "mmrec/data/split.hpp"
#include "mmrec/data/synthetic.hpp"
#include "mmrec/error.hpp"
#include "mmrec/eval/ablation.hpp"
#include "mmrec/eval/export.hpp"
#include "mmrec/eval/metrics.hpp"
#include "mmrec/eval/report.hpp"
#include "mmrec/eval/stats.hpp"
#include "mmrec/log.hpp"
#include "oracles/oracles.hpp"

using namespace mmrec;
using namespace mmrec::eval;
using models::ModelKind;

namespace {

struct World {
  data::Dataset ds;
  data::Split split;
  models::TrainingContext ctx;
  std::vector<TrainedRuns> runs;
};

const std::vector<ModelKind> kKinds = {ModelKind::popular, ModelKind::conversation, ModelKind::web_session,
                                       ModelKind::late_fusion, ModelKind::latent_feature};

World& world() {
  static World w = [] {
    set_log_level(LogLevel::quiet);
    World w;
    data::GeneratorConfig g;
    g.users = 1500;
    g.seed = 8;
    w.ds = data::preprocess(data::generate_synthetic(g));
    w.split = data::chronological_split(w.ds.users);
    w.ctx.train = &w.split.train;
    w.ctx.valid = &w.split.valid;
    w.ctx.item_count = w.ds.catalog.size();
    w.ctx.encoders = std::make_shared<enc::EncoderSet>(
        enc::fit_encoders(w.split.train, w.ds.embedding_dim, enc::TagMap{}));
    w.ctx.max_epochs = 4;
    for (ModelKind k : kKinds) w.runs.push_back({k, {}, {}});
    for (std::uint64_t seed : {1, 2}) {
      w.ctx.seed = seed;
      models::ModelSet set;
      models::train_models(w.ctx, kKinds, set);
      for (std::size_t i = 0; i < kKinds.size(); ++i) {
        w.runs[i].seeds.push_back(seed);
        w.runs[i].models.push_back(set.at(kKinds[i]));
      }
    }
    return w;
  }();
  return w;
}

std::vector<ModelRuns> predictions(const World& w, const std::vector<data::UserRecord>& users) {
  std::vector<ModelRuns> out;
  for (const TrainedRuns& r : w.runs) out.push_back(predict_runs(r, users));
  return out;
}

/// Scores each user's purchased items above everything else.
std::vector<models::Prediction> oracle_predictions(const std::vector<data::UserRecord>& users, int items) {
  std::vector<models::Prediction> out;
  for (const data::UserRecord& u : users) {
    std::vector<double> p(static_cast<std::size_t>(items), 0.1);
    for (int j : u.purchase.items) p[static_cast<std::size_t>(j)] = 0.9;
    out.emplace_back(std::move(p));
  }
  return out;
}

}  // namespace

TEST_CASE("hit rate and average precision hand values") {
  CHECK(hit_rate_at_k(std::vector<int>{7, 1, 2, 3}, std::vector<int>{7}, 3) == 1.0);
  CHECK(hit_rate_at_k(std::vector<int>{1, 2, 3, 7}, std::vector<int>{7}, 3) == 0.0);
  CHECK(average_precision_at_k(std::vector<int>{0, 1, 2}, std::vector<int>{0}, 3) == 1.0);
  CHECK(average_precision_at_k(std::vector<int>{1, 0, 2}, std::vector<int>{0}, 3) == 0.5);
  CHECK(average_precision_at_k(std::vector<int>{0, 1, 2}, std::vector<int>{0, 2}, 3) ==
        doctest::Approx(0.8333333333333334).epsilon(1e-15));
  CHECK(average_precision_at_k(std::vector<int>{0, 1, 2}, std::vector<int>{}, 3) == 0.0);
  CHECK_THROWS_AS(average_precision_at_k(std::vector<int>{0}, std::vector<int>{0}, 0), ConfigError);
}

TEST_CASE("metrics agree with brute-force oracles on random instances") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 1000; ++trial) {
    const int n = 2 + static_cast<int>(rng() % 24);
    std::vector<int> ranking(static_cast<std::size_t>(n));
    std::iota(ranking.begin(), ranking.end(), 0);
    std::shuffle(ranking.begin(), ranking.end(), rng);
    std::vector<int> relevant;
    const int r = 1 + static_cast<int>(rng() % std::min(n, 4));
    std::vector<int> pool = ranking;
    std::shuffle(pool.begin(), pool.end(), rng);
    relevant.assign(pool.begin(), pool.begin() + r);
    const int k = 1 + static_cast<int>(rng() % 6);
    REQUIRE(hit_rate_at_k(ranking, relevant, k) == oracle::hit_rate(ranking, relevant, k));
    const double ap = average_precision_at_k(ranking, relevant, k);
    REQUIRE(std::abs(ap - oracle::average_precision(ranking, relevant, k)) <= 1e-12);
    REQUIRE(ap >= 0.0);
    REQUIRE(ap <= 1.0);
    bool top_all_relevant = true;
    for (int i = 0; i < std::min(r, k); ++i)
      top_all_relevant &= std::find(relevant.begin(), relevant.end(), ranking[static_cast<std::size_t>(i)]) !=
                          relevant.end();
    REQUIRE((ap == 1.0) == top_all_relevant);
  }
}

TEST_CASE("metrics depend only on the ranking") {
  const World& w = world();
  const EvalTarget target = EvalTarget::from_users(w.split.test, w.ds.catalog);
  auto preds = w.runs[4].models[0]->predict(w.split.test);
  std::vector<models::Prediction> warped = preds;
  for (auto& p : warped)
    for (double& x : *p) x = std::exp(3.0 * x) - 7.0;
  const std::vector<int> ks = {1, 2, 3, 4, 5};
  const UserScores a = score_users(target, preds, ks), b = score_users(target, warped, ks);
  CHECK(a.hits == b.hits);
  CHECK(a.ap == b.ap);
}

TEST_CASE("mcnemar") {
  const std::vector<std::uint8_t> v = {1, 0, 1, 1, 0};
  const TestResult same = mcnemar(v, v);
  CHECK(same.p_value == 1.0);
  CHECK(same.statistic == 0.0);
  const TestResult r = mcnemar_counts(6, 2);
  CHECK(r.statistic == 1.125);
  CHECK(r.p_value == doctest::Approx(0.288844366346485).epsilon(1e-12));
  CHECK(mcnemar_counts(2, 6).statistic == r.statistic);
  CHECK(mcnemar_counts(1, 0).statistic == 0.0);
  CHECK(mcnemar_counts(1, 0).p_value == 1.0);
  CHECK_THROWS_AS(mcnemar(v, std::vector<std::uint8_t>{1}), ConfigError);

  std::mt19937_64 rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 5 + rng() % 400;
    std::vector<std::uint8_t> a(n), b(n);
    const double pa = (rng() % 100) / 100.0, pb = (rng() % 100) / 100.0;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = u(rng) < pa;
      b[i] = u(rng) < pb;
    }
    const TestResult got = mcnemar(a, b);
    const oracle::Mcnemar want = oracle::mcnemar(a, b);
    REQUIRE(std::abs(got.statistic - want.statistic) <= 1e-9);
    REQUIRE(std::abs(got.p_value - want.p_value) <= 1e-9);
    REQUIRE(got.p_value > 0.0);
    REQUIRE(got.p_value <= 1.0);
    REQUIRE(mcnemar(b, a).statistic == got.statistic);
  }
}

TEST_CASE("anova") {
  CHECK(anova_oneway({{0.1, 0.1, 0.1}, {0.1, 0.1, 0.1}}).statistic == 0.0);
  CHECK(anova_oneway({{0.1, 0.1, 0.1}, {0.1, 0.1, 0.1}}).p_value == 1.0);
  const TestResult sep = anova_oneway({{0, 0}, {1, 1}});
  CHECK(std::isinf(sep.statistic));
  CHECK(sep.p_value == 0.0);
  CHECK_THROWS_AS(anova_oneway({{1, 2}}), ConfigError);
  CHECK_THROWS_AS(anova_oneway({{1, 2}, {3}}), ConfigError);

  std::mt19937_64 rng(10);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::vector<double>> groups(2 + rng() % 4);
    for (std::size_t i = 0; i < groups.size(); ++i) {
      groups[i].resize(2 + rng() % 8);
      const double shift = 0.5 * static_cast<double>(i) * (trial % 3);
      for (double& v : groups[i]) v = shift + g(rng);
    }
    const TestResult got = anova_oneway(groups);
    const oracle::Anova want = oracle::anova(groups);
    REQUIRE(got.statistic >= 0.0);
    REQUIRE(std::abs(got.statistic - want.f) <= 1e-9 * std::max(1.0, want.f));
    REQUIRE(std::abs(got.p_value - want.p_value) <= 1e-9);
  }
}

TEST_CASE("incomplete gamma and beta match boost") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> a(0.05, 40.0), x(0.0, 60.0), p(0.0, 1.0);
  for (int trial = 0; trial < 500; ++trial) {
    const double av = a(rng), xv = x(rng), bv = a(rng), pv = p(rng);
    REQUIRE(regularized_gamma_p(av, xv) == doctest::Approx(boost::math::gamma_p(av, xv)).epsilon(1e-10));
    REQUIRE(std::abs(regularized_gamma_q(av, xv) - boost::math::gamma_q(av, xv)) <= 1e-12);
    REQUIRE(std::abs(regularized_beta(pv, av, bv) - boost::math::ibeta(av, bv, pv)) <= 1e-12);
  }
  CHECK(chi_square_sf(0.0, 1.0) == 1.0);
  CHECK(f_sf(0.0, 1.0, 3.0) == 1.0);
}

TEST_CASE("oracle model scores perfectly on every subset") {
  const World& w = world();
  const EvalTarget target = EvalTarget::from_users(w.split.test, w.ds.catalog);
  ModelRuns perfect{ModelKind::keyword, {1}, {oracle_predictions(w.split.test, w.ctx.item_count)}};
  const EvalReport r = evaluate(target, {perfect}, {3});
  for (Subset s : kSubsets) {
    CHECK(*r.models[0].cell(s, Metric::hit_rate, 3).mean == 1.0);
    CHECK(*r.models[0].cell(s, Metric::map, 3).mean == 1.0);
  }
}

TEST_CASE("evaluation report structure") {
  const World& w = world();
  const EvalTarget target = EvalTarget::from_users(w.split.test, w.ds.catalog);
  auto runs = predictions(w, w.split.test);
  runs.push_back({ModelKind::keyword, {1, 2},
                  {oracle_predictions(w.split.test, w.ctx.item_count),
                   oracle_predictions(w.split.test, w.ctx.item_count)}});
  const EvalReport r = evaluate(target, runs, {5, 1, 2, 3, 4, 3});
  CHECK(r.ks == std::vector<int>{1, 2, 3, 4, 5});
  CHECK(r.subset_users[0] == w.split.test.size());
  CHECK(r.subset_users[0] == r.subset_users[1] + r.subset_users[2] + r.subset_users[3]);

  for (const ModelResult& m : r.models) {
    for (const UserScores& u : m.per_seed)
      for (Metric metric : kMetrics)
        for (int k : r.ks) {
          double weighted = 0.0;
          std::size_t n = 0;
          for (Subset s : {Subset::conversations_only, Subset::sessions_only, Subset::intersection})
            if (auto v = u.mean(s, metric, k, target)) {
              weighted += *v * static_cast<double>(u.scored_count(s, target));
              n += u.scored_count(s, target);
            }
          REQUIRE(*u.mean(Subset::union_all, metric, k, target) ==
                  doctest::Approx(weighted / static_cast<double>(n)).epsilon(1e-12));
        }
  }

  const Cell& conv_on_sessions = r.at(ModelKind::conversation).cell(Subset::sessions_only, Metric::map, 3);
  CHECK_FALSE(conv_on_sessions.mean.has_value());
  CHECK(conv_on_sessions.users == 0);
  CHECK(r.at(ModelKind::web_session).cell(Subset::conversations_only, Metric::hit_rate, 1).users == 0);

  CHECK(*r.at(ModelKind::popular).cell(Subset::union_all, Metric::map, 3).mean <
        *r.at(ModelKind::keyword).cell(Subset::union_all, Metric::map, 3).mean);
  const EvalReport vs_oracle = evaluate(target, runs, {3}, ModelKind::keyword);
  const Cell& pop = vs_oracle.at(ModelKind::popular).cell(Subset::union_all, Metric::hit_rate, 3);
  REQUIRE(pop.test.has_value());
  CHECK(pop.significant);
  CHECK(vs_oracle.at(ModelKind::popular).cell(Subset::union_all, Metric::map, 3).significant);
  CHECK_FALSE(r.at(ModelKind::latent_feature).cell(Subset::union_all, Metric::hit_rate, 3).test.has_value());
  CHECK(r.at(ModelKind::popular).cell(Subset::union_all, Metric::map, 3).std >= 0.0);
  CHECK(r.at(ModelKind::keyword).cell(Subset::union_all, Metric::map, 3).std == 0.0);

  CHECK_THROWS_AS(evaluate(target, {runs[0], runs[0]}, {3}), ConfigError);
  CHECK_THROWS_AS(evaluate(target, runs, {0}), ConfigError);
  CHECK_THROWS_AS(r.at(ModelKind::popular).cell(Subset::union_all, Metric::map, 9), ConfigError);
}

TEST_CASE("identical models are never significantly different") {
  const World& w = world();
  const EvalTarget target = EvalTarget::from_users(w.split.test, w.ds.catalog);
  ModelRuns lf = predict_runs(w.runs[4], w.split.test);
  ModelRuns copy = lf;
  copy.kind = ModelKind::keyword;
  const EvalReport r = evaluate(target, {lf, copy}, {3});
  const Cell& hr = r.at(ModelKind::keyword).cell(Subset::union_all, Metric::hit_rate, 3);
  CHECK(hr.test->p_value == 1.0);
  CHECK_FALSE(hr.significant);
  const Cell& map = r.at(ModelKind::keyword).cell(Subset::union_all, Metric::map, 3);
  CHECK(map.test->statistic == 0.0);
  CHECK_FALSE(map.significant);
}

TEST_CASE("event count ablation") {
  const World& w = world();
  const auto& test = w.split.test;
  CHECK(truncate_history(test, 10) == test);
  const auto one = truncate_history(test, 1);
  for (std::size_t i = 0; i < test.size(); ++i) {
    REQUIRE(one[i].events.size() == 1);
    REQUIRE(one[i].events[0] == test[i].events.back());
  }
  CHECK_THROWS_AS(truncate_history(test, 0), ConfigError);

  const EventCountCurve curve = ablate_event_count(test, w.ds.catalog, w.runs, {3, 1, 10});
  CHECK(curve.ns == std::vector<int>{1, 3, 10});
  const EvalTarget target = EvalTarget::from_users(test, w.ds.catalog);
  const EvalReport full = evaluate(target, predictions(w, test), {3});
  for (ModelKind k : kKinds)
    for (Subset s : kSubsets)
      for (Metric m : kMetrics) CHECK(curve.reports[2].at(k).cell(s, m, 3).mean == full.at(k).cell(s, m, 3).mean);

  // per user: n = 1 leaves single-event users untouched
  const ModelRuns at_one = predict_runs(w.runs[4], one);
  const ModelRuns at_full = predict_runs(w.runs[4], test);
  const std::vector<int> k3 = {3};
  const UserScores s1 = score_users(target, at_one.predictions[0], k3);
  const UserScores sf = score_users(target, at_full.predictions[0], k3);
  std::size_t singles = 0;
  for (std::size_t i = 0; i < test.size(); ++i)
    if (test[i].events.size() == 1) {
      ++singles;
      REQUIRE(s1.ap[0][i] == sf.ap[0][i]);
      REQUIRE(s1.hits[0][i] == sf.hits[0][i]);
    }
  CHECK(singles > 0);

  std::ostringstream os;
  write_event_curve(os, curve);
  std::size_t lines = 0;
  for (char c : os.str()) lines += c == '\n';
  CHECK(lines == 1 + curve.ns.size() * kKinds.size() * kSubsets.size());
}

TEST_CASE("event order shuffle") {
  const World& w = world();
  const auto& test = w.split.test;
  const auto a = shuffle_event_order(test, 5);
  CHECK(a == shuffle_event_order(test, 5));
  CHECK_FALSE(a == shuffle_event_order(test, 6));
  bool moved = false;
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (test[i].events.size() == 1) REQUIRE(a[i] == test[i]);
    REQUIRE(a[i].purchase == test[i].purchase);
    REQUIRE(a[i].events.size() == test[i].events.size());
    for (std::size_t j = 0; j < a[i].events.size(); ++j) REQUIRE(a[i].events[j].time() == test[i].events[j].time());
    auto x = a[i].events, y = test[i].events;
    for (auto& e : x) e.set_time(0);
    for (auto& e : y) e.set_time(0);
    REQUIRE(std::is_permutation(x.begin(), x.end(), y.begin(), y.end()));
    moved |= !(x == y);
  }
  CHECK(moved);
}

TEST_CASE("order ablation report") {
  World& w = world();
  const EvalTarget target = EvalTarget::from_users(w.split.test, w.ds.catalog);
  const EvalReport original = evaluate(target, predictions(w, w.split.test), {3});
  models::TrainingContext ctx = w.ctx;
  ctx.max_epochs = 2;
  OrderAblationConfig cfg;
  cfg.kinds = {ModelKind::latent_feature};
  cfg.seeds = {1};
  cfg.shuffles = 2;
  cfg.workers = 2;
  const OrderAblation r = ablate_event_order(ctx, w.split.test, w.ds.catalog, original, cfg);
  REQUIRE(r.rows.size() == kSubsets.size() * kMetrics.size());
  for (const OrderAblationRow& row : r.rows) {
    REQUIRE(row.original.has_value());
    REQUIRE(row.shuffled.has_value());
    CHECK(*row.relative_change == doctest::Approx((*row.shuffled - *row.original) / *row.original));
  }
  CHECK(std::any_of(r.rows.begin(), r.rows.end(), [](const OrderAblationRow& row) {
    return row.subset == Subset::intersection && row.relative_change;
  }));
  CHECK(r.shuffled.at(ModelKind::latent_feature).per_seed.size() == 2);

  const OrderAblation again = ablate_event_order(ctx, w.split.test, w.ds.catalog, original, cfg);
  std::ostringstream x, y;
  write_order_table(x, r);
  write_order_table(y, again);
  CHECK(x.str() == y.str());
  CHECK(x.str().substr(0, x.str().find('\n')) ==
        "model\tmetric\tunion\tconversations-only\tweb-sessions-only\tintersection");
  cfg.shuffles = 0;
  CHECK_THROWS_AS(ablate_event_order(ctx, w.split.test, w.ds.catalog, original, cfg), ConfigError);
}

TEST_CASE("latent export") {
  World& w = world();
  const auto& test = w.split.test;
  std::size_t events = 0;
  for (const auto& u : test) events += u.events.size();
  const auto dir = std::filesystem::temp_directory_path() / "mmrec_test_export";
  std::filesystem::remove_all(dir);
  auto& lf = *w.runs[4].models[0];
  const LatentExport e = export_latents(lf, test, dir.string());
  CHECK(e.input_rows == events);
  CHECK(e.output_rows == test.size());
  const auto slurp = [](const std::filesystem::path& p) {
    std::ifstream f(p);
    std::stringstream ss;
    ss << f.rdbuf();
    return ss.str();
  };
  const std::string inputs = slurp(dir / "inputs.tsv");
  const std::string outputs = slurp(dir / "outputs.tsv");
  export_latents(lf, test, dir.string());
  CHECK(slurp(dir / "inputs.tsv") == inputs);
  CHECK(slurp(dir / "outputs.tsv") == outputs);
  std::istringstream rows(inputs);
  std::string line;
  std::getline(rows, line);
  while (std::getline(rows, line)) {
    std::istringstream cols(line);
    std::string user, event, modality, subset;
    cols >> user >> event >> modality >> subset;
    REQUIRE((modality == "conversation" || modality == "session"));
    REQUIRE((subset == "conversations_only" || subset == "web_sessions_only" || subset == "intersection"));
  }

  std::ostringstream pop;
  CHECK_FALSE(write_input_representations(pop, *w.runs[0].models[0], test));
  CHECK(pop.str().empty());
  std::ostringstream conv;
  CHECK(write_outputs(conv, *w.runs[1].models[0], test) ==
        static_cast<std::size_t>(std::count_if(test.begin(), test.end(), [](const data::UserRecord& u) {
          return u.conversation_count() > 0;
        })));
  std::filesystem::remove_all(dir);
}

TEST_CASE("report tables") {
  const World& w = world();
  const EvalTarget target = EvalTarget::from_users(w.split.test, w.ds.catalog);
  auto runs = predictions(w, w.split.test);
  runs.push_back({ModelKind::keyword, {1, 2},
                  {oracle_predictions(w.split.test, w.ctx.item_count),
                   oracle_predictions(w.split.test, w.ctx.item_count)}});
  const EvalReport r = evaluate(target, runs, {1, 2, 3, 4, 5}, ModelKind::keyword);
  std::ostringstream t;
  write_table(t, r);
  std::istringstream lines(t.str());
  std::string header, users, row;
  std::getline(lines, header);
  CHECK(header ==
        "model\tunion HR@3\tunion MAP@3\tconversations-only HR@3\tconversations-only MAP@3\t"
        "web-sessions-only HR@3\tweb-sessions-only MAP@3\tintersection HR@3\tintersection MAP@3");
  std::getline(lines, users);
  std::getline(lines, row);
  CHECK(row.rfind("Popular\t", 0) == 0);
  CHECK(row.find('*') != std::string::npos);
  std::getline(lines, row);
  CHECK(row.rfind("Conversation\t", 0) == 0);
  CHECK(row.find("\t-\t-\t") != std::string::npos);

  std::ostringstream l1, l2, c;
  write_long(l1, r);
  write_long(l2, evaluate(target, runs, {1, 2, 3, 4, 5}, ModelKind::keyword));
  CHECK(l1.str() == l2.str());
  write_curves(c, r);
  CHECK(c.str().substr(0, c.str().find('\n')) == "model\tsubset\tmetric\t@1\t@2\t@3\t@4\t@5");
}
