#include <doctest.h>

#include <filesystem>
#include <random>
#include <thread>

#include "mmrec/data/dataset_io.hpp"
#include "mmrec/data/preprocess.hpp"
#include "mmrec/data/split.hpp"
#include "mmrec/data/synthetic.hpp"
#include "mmrec/encoders/encoding.hpp"
#include "mmrec/error.hpp"
#include "mmrec/log.hpp"
#include "mmrec/models/bundle_io.hpp"
#include "mmrec/models/post_filter.hpp"
#include "mmrec/models/training_data.hpp"
#include "mmrec/models/zoo.hpp"
#include "mmrec/nn/grad_check.hpp"

using namespace mmrec;
using namespace mmrec::models;
using data::UserRecord;

namespace {

struct World {
  data::Dataset ds;
  data::Split split;
  std::shared_ptr<enc::EncoderSet> enc;
  TrainingContext ctx;
  ModelSet models;
};

World& world() {
  static World w = [] {
    set_log_level(LogLevel::quiet);
    World w;
    data::GeneratorConfig g;
    g.users = 2500;
    g.seed = 21;
    w.ds = data::preprocess(data::generate_synthetic(g));
    w.split = data::chronological_split(w.ds.users);
    w.enc = std::make_shared<enc::EncoderSet>(enc::fit_encoders(w.split.train, w.ds.embedding_dim, enc::TagMap{}));
    w.ctx.train = &w.split.train;
    w.ctx.valid = &w.split.valid;
    w.ctx.item_count = w.ds.catalog.size();
    w.ctx.encoders = w.enc;
    w.ctx.seed = 3;
    w.ctx.anchor.anchor_count = 40;
    train_models(w.ctx, std::vector<ModelKind>(kAllModels.begin(), kAllModels.end()), w.models);
    return w;
  }();
  return w;
}

data::ItemCatalog small_catalog() {
  data::ItemCatalog c;
  c.items = {{"car", data::ItemKind::base_product, std::nullopt},
             {"roadside", data::ItemKind::additional_coverage, 0},
             {"house", data::ItemKind::base_product, std::nullopt},
             {"water", data::ItemKind::additional_coverage, 2},
             {"glass", data::ItemKind::additional_coverage, 0}};
  return c;
}

/// Mean BCE of the best constant predictor (training label frequencies).
double constant_predictor_loss(const std::vector<const UserRecord*>& train, const std::vector<const UserRecord*>& valid,
                               int J) {
  std::vector<double> q(static_cast<std::size_t>(J), 0.0);
  for (const UserRecord* u : train)
    for (int j : u->purchase.items) q[static_cast<std::size_t>(j)] += 1.0;
  for (double& x : q) x /= static_cast<double>(train.size());
  double loss = 0.0;
  for (const UserRecord* u : valid) {
    Eigen::VectorXd pred(J), target = Eigen::VectorXd::Zero(J);
    for (int j = 0; j < J; ++j) pred(j) = q[static_cast<std::size_t>(j)];
    for (int j : u->purchase.items) target(j) = 1.0;
    loss += nn::bce_multilabel_loss<double>(pred, target);
  }
  return loss / static_cast<double>(valid.size());
}

}  // namespace

TEST_CASE("model names and default hyperparameters") {
  CHECK(parse_model_kind("web_session") == ModelKind::web_session);
  CHECK(parse_model_kind("Latent Feature") == ModelKind::latent_feature);
  CHECK_THROWS_AS(parse_model_kind("nope"), ConfigError);
  CHECK(default_hyperparameters(ModelKind::conversation) == Hyperparameters{512, 64, 0.2});
  CHECK(default_hyperparameters(ModelKind::web_session) == Hyperparameters{256, 256, 0.3});
  CHECK(default_hyperparameters(ModelKind::knowledge_distillation) == Hyperparameters{256, 128, 0.4});
  CHECK(default_hyperparameters(ModelKind::generative_imputation) == Hyperparameters{128, 256, 0.2});
  CHECK(default_hyperparameters(ModelKind::neutral_imputation) == Hyperparameters{128, 128, 0.2});
  CHECK(default_hyperparameters(ModelKind::keyword) == Hyperparameters{512, 256, 0.2});
  CHECK(default_hyperparameters(ModelKind::latent_feature) == Hyperparameters{512, 256, 0.3});
  CHECK(default_hyperparameters(ModelKind::relative_representation) == Hyperparameters{256, 256, 0.3});
  CHECK(dependencies(ModelKind::late_fusion).size() == 2);
}

TEST_CASE("popular ranks by training counts with id tie-break") {
  std::vector<UserRecord> train;
  const auto add = [&](int item, int n) {
    for (int i = 0; i < n; ++i) {
      UserRecord u;
      u.purchase.items = {item};
      train.push_back(u);
    }
  };
  add(0, 5);
  add(1, 3);
  add(2, 2);
  TrainingContext ctx;
  ctx.train = &train;
  ctx.valid = &train;
  ctx.item_count = 4;
  ctx.encoders = std::make_shared<enc::EncoderSet>();
  auto pop = fit_popular(ctx);
  const auto s = pop->scores();
  CHECK(rank_items(s) == std::vector<int>{0, 1, 2, 3});
  for (double x : s) {
    CHECK(x > 0.0);
    CHECK(x < 1.0);
  }
  add(3, 2);
  auto tied = fit_popular(ctx);
  CHECK(rank_items(tied->scores()) == std::vector<int>{0, 1, 2, 3});
}

TEST_CASE("popular counts the training split only") {
  World& w = world();
  auto pop = std::static_pointer_cast<PopularModel>(w.models.at(ModelKind::popular));
  const std::vector<int> counts = data::purchase_counts(w.split.train, w.ctx.item_count);
  for (int j = 0; j < w.ctx.item_count; ++j)
    CHECK(pop->scores()[static_cast<std::size_t>(j)] ==
          (counts[static_cast<std::size_t>(j)] + 1.0) / (static_cast<double>(w.split.train.size()) + 2.0));
}

TEST_CASE("post filter examples") {
  const data::ItemCatalog c = small_catalog();
  const std::vector<double> p = {0.1, 0.9, 0.2, 0.8, 0.7};
  const auto none = post_filter(p, std::vector<data::ItemId>{}, c);
  for (int cov : {1, 3, 4})
    for (int base : {0, 2}) CHECK(none[static_cast<std::size_t>(cov)] < none[static_cast<std::size_t>(base)]);
  CHECK(rank_items(none) == std::vector<int>{2, 0, 1, 3, 4});
  CHECK(post_filter(p, std::vector<data::ItemId>{0, 2}, c) == p);
  CHECK(post_filter(p, std::nullopt, c) == p);
  const auto car = post_filter(p, std::vector<data::ItemId>{0}, c);
  CHECK(car[3] == 0.1 - kPostFilterDelta);
  CHECK(car[1] == 0.9);
}

TEST_CASE("post filter property over random score vectors") {
  const data::ItemCatalog c = small_catalog();
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> p(5);
    for (double& x : p) x = u(rng);
    std::vector<data::ItemId> owned;
    for (int b : {0, 2})
      if (u(rng) < 0.5) owned.push_back(b);
    const std::optional<std::vector<data::ItemId>> own = owned;
    const auto f = post_filter(p, own, c);
    std::vector<int> ok, bad;
    for (int j = 0; j < 5; ++j) (eligible(j, own, c) ? ok : bad).push_back(j);
    for (int b : bad)
      for (int e : ok) REQUIRE(f[static_cast<std::size_t>(b)] < f[static_cast<std::size_t>(e)]);
    for (int a : ok)
      for (int b : ok) REQUIRE((p[static_cast<std::size_t>(a)] < p[static_cast<std::size_t>(b)]) ==
                               (f[static_cast<std::size_t>(a)] < f[static_cast<std::size_t>(b)]));
    if (ok.size() >= 3) {
      const auto r = rank_items(f);
      for (int i = 0; i < 3; ++i) REQUIRE(eligible(r[static_cast<std::size_t>(i)], own, c));
    }
  }
}

TEST_CASE("fusion mean") {
  CHECK(fuse_mean({0.2, 0.8}, {0.6, 0.4}) == std::vector<double>{0.4, 0.6000000000000001});
  const std::vector<double> same = {0.3, 0.7, 0.1};
  CHECK(fuse_mean(same, same) == same);
}

TEST_CASE("late fusion routes and averages exactly") {
  World& w = world();
  const auto& test = w.split.test;
  const auto c = w.models.at(ModelKind::conversation)->predict(test);
  const auto s = w.models.at(ModelKind::web_session)->predict(test);
  const auto f = w.models.at(ModelKind::late_fusion)->predict(test);
  for (std::size_t i = 0; i < test.size(); ++i) {
    REQUIRE(f[i].has_value());
    if (c[i] && s[i]) {
      REQUIRE(*f[i] == fuse_mean(*c[i], *s[i]));
      for (std::size_t j = 0; j < f[i]->size(); ++j) {
        REQUIRE((*f[i])[j] >= std::min((*c[i])[j], (*s[i])[j]));
        REQUIRE((*f[i])[j] <= std::max((*c[i])[j], (*s[i])[j]));
      }
    } else {
      REQUIRE(*f[i] == (c[i] ? *c[i] : *s[i]));
    }
  }
}

TEST_CASE("routing completeness") {
  World& w = world();
  const auto& test = w.split.test;
  for (ModelKind k : kAllModels) {
    const auto p = w.models.at(k)->predict(test);
    REQUIRE(p.size() == test.size());
    for (std::size_t i = 0; i < test.size(); ++i) {
      bool expect = true;
      if (k == ModelKind::conversation) expect = test[i].conversation_count() > 0;
      if (k == ModelKind::web_session) expect = test[i].session_count() > 0;
      REQUIRE(p[i].has_value() == expect);
      if (p[i]) {
        REQUIRE(static_cast<int>(p[i]->size()) == w.ctx.item_count);
        for (double x : *p[i]) REQUIRE((std::isfinite(x) && x >= 0.0 && x <= 1.0));
      }
    }
  }
}

TEST_CASE("single-modality models beat the best constant predictor") {
  World& w = world();
  for (ModelKind k : {ModelKind::conversation, ModelKind::web_session}) {
    auto m = std::static_pointer_cast<NeuralModel>(w.models.at(k));
    const Examples tr = make_examples(w.split.train, m->inputs(w.split.train), w.ctx.item_count);
    const Examples va = make_examples(w.split.valid, m->inputs(w.split.valid), w.ctx.item_count);
    const double model_loss = nn::evaluate_loss(m->network(), va.data);
    CHECK(model_loss < constant_predictor_loss(tr.users, va.users, w.ctx.item_count));
  }
}

TEST_CASE("distillation routing and loss algebra") {
  World& w = world();
  const auto& test = w.split.test;
  const auto kd = w.models.at(ModelKind::knowledge_distillation)->predict(test);
  const auto c = w.models.at(ModelKind::conversation)->predict(test);
  const auto s = w.models.at(ModelKind::web_session)->predict(test);
  for (std::size_t i = 0; i < test.size(); ++i) {
    if (test[i].conversation_count() > 0 && test[i].session_count() == 0) REQUIRE(*kd[i] == *c[i]);
    if (test[i].session_count() > 0 && test[i].conversation_count() == 0) REQUIRE(*kd[i] == *s[i]);
  }

  nn::Matrix<double> out(3, 4), hard = nn::Matrix<double>::Zero(3, 4);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(0, 1);
  for (nn::Index i = 0; i < out.size(); ++i) out.data()[i] = g(rng);
  hard(0, 1) = hard(1, 3) = hard(2, 0) = 1.0;
  nn::LossTargets<double> plain{hard, {}};
  nn::LossTargets<double> zero{hard, {{0.0, hard}, {0.0, hard}}};
  nn::LossTargets<double> same{hard, {{0.32, hard}, {0.87, hard}}};
  const double base = nn::batch_loss(nn::LossKind::bce_multilabel, out, plain);
  CHECK(nn::batch_loss(nn::LossKind::bce_multilabel, out, zero) == doctest::Approx(base).epsilon(1e-14));
  CHECK(nn::batch_loss(nn::LossKind::bce_multilabel, out, same) == doctest::Approx((1 + 0.32 + 0.87) * base).epsilon(1e-12));
}

TEST_CASE("neutral imputation fills with fixed training statistics") {
  World& w = world();
  auto m = std::static_pointer_cast<ImputationModel>(w.models.at(ModelKind::neutral_imputation));
  const auto& n = *m->neutral();
  const auto done = m->complete(w.split.test);
  for (std::size_t i = 0; i < done.size(); ++i) {
    const UserRecord& u = w.split.test[i];
    REQUIRE(done[i].first.size() == static_cast<std::size_t>(w.enc->embedding_dim));
    REQUIRE(done[i].second.size() == static_cast<std::size_t>(w.enc->session_vocab.size()));
    if (u.conversation_count() == 0) REQUIRE(done[i].first == n.conversation);
    else REQUIRE(done[i].first == *conversation_aggregate(u));
    if (u.session_count() == 0) REQUIRE(done[i].second == n.session);
    else REQUIRE(done[i].second == *session_aggregate(u, w.enc->session_vocab));
  }
}

TEST_CASE("most frequent session ties break to the lowest encoding") {
  const enc::Vocabulary v({"a", "b", "c"});
  const auto user = [](std::vector<std::vector<std::string>> sessions) {
    UserRecord u;
    for (auto& tags : sessions) {
      data::WebSession s;
      s.actions.push_back({tags});
      u.events.push_back(data::Event{s});
    }
    return u;
  };
  const auto n = neutral_statistics({user({{"b"}, {"a"}}), user({{"a"}, {"b"}, {"c"}})}, v, 2);
  CHECK(n.session == std::vector<double>{0, 1, 0});  // "b" and "a" both twice; (0,1,0) < (1,0,0)
  CHECK(n.conversation == std::vector<double>{0, 0});
}

TEST_CASE("generative imputation") {
  World& w = world();
  auto m = std::static_pointer_cast<ImputationModel>(w.models.at(ModelKind::generative_imputation));
  const auto done = m->complete(w.split.test);
  for (std::size_t i = 0; i < done.size(); ++i) {
    const UserRecord& u = w.split.test[i];
    if (u.conversation_count() > 0 && u.session_count() > 0) {
      REQUIRE(done[i].first == *conversation_aggregate(u));
      REQUIRE(done[i].second == *session_aggregate(u, w.enc->session_vocab));
    }
    for (double x : done[i].second) REQUIRE((x == 0.0 || x == 1.0));
  }

  // held-out intersection users: the regression imputer beats the constant mean
  std::vector<std::vector<double>> train_conv;
  for (const UserRecord& u : w.split.train)
    if (u.conversation_count() > 0 && u.session_count() > 0) train_conv.push_back(*conversation_aggregate(u));
  const std::vector<double> mean = enc::mean_of(train_conv);
  double model_se = 0.0, const_se = 0.0;
  int n = 0;
  for (const UserRecord& u : w.split.test) {
    if (u.conversation_count() == 0 || u.session_count() == 0) continue;
    const auto truth = *conversation_aggregate(u);
    const auto pred = m->generative()->to_conversation.predict(
        std::vector<EncodedSequence>{single_step(*session_aggregate(u, w.enc->session_vocab))});
    for (std::size_t k = 0; k < truth.size(); ++k) {
      model_se += std::pow(pred(0, static_cast<nn::Index>(k)) - truth[k], 2);
      const_se += std::pow(mean[k] - truth[k], 2);
    }
    ++n;
  }
  REQUIRE(n > 20);
  CHECK(model_se < const_se);
}

TEST_CASE("proposed models score every user from one common space") {
  World& w = world();
  for (ModelKind k : {ModelKind::keyword, ModelKind::latent_feature, ModelKind::relative_representation}) {
    auto m = std::static_pointer_cast<NeuralModel>(w.models.at(k));
    const auto in = m->inputs(w.split.test);
    for (std::size_t i = 0; i < in.size(); ++i) {
      REQUIRE(in[i].has_value());
      REQUIRE(in[i]->size() == w.split.test[i].events.size());
    }
  }
}

TEST_CASE("latent feature gradient for W_c vanishes on session-only batches") {
  World& w = world();
  auto m = std::static_pointer_cast<NeuralModel>(w.models.at(ModelKind::latent_feature));
  nn::Network<double> net(m->network().spec(), 4);
  std::vector<UserRecord> sessions;
  for (const UserRecord& u : w.split.train)
    if (u.conversation_count() == 0 && sessions.size() < 16) sessions.push_back(u);
  const Examples ex = make_examples(sessions, m->inputs(sessions), w.ctx.item_count);
  const auto batch = nn::make_batch<double>(ex.data.inputs);
  net.zero_grad();
  const auto out = net.forward(batch, nullptr);
  nn::LossTargets<double> t{nn::gather_rows<double>(ex.data.targets.cast<double>(),
                                                     std::vector<nn::Index>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15},
                                                     batch.order),
                            {}};
  net.backward(nn::batch_loss_grad(nn::LossKind::bce_multilabel, out, t));
  for (const auto* p : net.parameters()) {
    if (p->name == "latent.w_conv" || p->name == "latent.b_conv") CHECK(p->grad.cwiseAbs().maxCoeff() == 0.0);
    if (p->name == "latent.w_session") CHECK(p->grad.cwiseAbs().maxCoeff() > 0.0);
  }
}

TEST_CASE("full gradient check on a 5-user micro dataset") {
  World& w = world();
  std::vector<UserRecord> five;
  for (const UserRecord& u : w.split.train)
    if (u.conversation_count() > 0 && u.session_count() > 0 && five.size() < 5) five.push_back(u);
  REQUIRE(five.size() == 5);
  const Hyperparameters tiny{8, 5, 0.0};
  for (ModelKind k : {ModelKind::keyword, ModelKind::latent_feature, ModelKind::relative_representation}) {
    auto m = std::static_pointer_cast<NeuralModel>(w.models.at(k));
    const Examples ex = make_examples(five, m->inputs(five), w.ctx.item_count);
    const nn::NetworkSpec big = m->network().spec();
    const nn::NetworkSpec spec =
        big.latent_map ? model_spec(5, true, tiny, w.ctx.item_count,
                                    nn::LatentMapSpec{big.latent_map->conversation_width, big.latent_map->session_width, 5})
                       : model_spec(big.input_width, true, tiny, w.ctx.item_count);
    nn::Network<double> net(spec, 17);
    const auto batch = nn::make_batch<double>(ex.data.inputs);
    std::vector<nn::Index> all = {0, 1, 2, 3, 4};
    nn::LossTargets<double> t{nn::gather_rows<double>(ex.data.targets.cast<double>(), all, batch.order), {}};
    const auto report = nn::grad_check(net, batch, t);
    INFO(display_name(k), " worst ", report.worst_parameter, " ", report.max_relative_error);
    CHECK(report.passed);
  }
}

TEST_CASE("training is deterministic") {
  World& w = world();
  TrainingContext ctx = w.ctx;
  ctx.max_epochs = 2;
  auto a = fit_neural(ModelKind::keyword, ctx);
  auto b = fit_neural(ModelKind::keyword, ctx);
  CHECK(a->predict(w.split.test) == b->predict(w.split.test));
  ctx.seed = 4;
  auto c = fit_neural(ModelKind::keyword, ctx);
  CHECK_FALSE(a->predict(w.split.test) == c->predict(w.split.test));
}

TEST_CASE("bundles round-trip and refuse mismatched encoders") {
  World& w = world();
  const auto dir = std::filesystem::temp_directory_path() / "mmrec_test_bundles";
  std::filesystem::remove_all(dir);
  const std::string fp = data::dataset_fingerprint(w.ds);
  save_models(dir.string(), w.models, fp);
  ModelSet loaded = load_models(dir.string(), {fp, w.enc.get()});
  REQUIRE(loaded.size() == kAllModels.size());
  for (ModelKind k : kAllModels) {
    INFO(display_name(k));
    CHECK(loaded.at(k)->predict(w.split.test) == w.models.at(k)->predict(w.split.test));
    CHECK(loaded.at(k)->info().seed == w.models.at(k)->info().seed);
  }
  CHECK_THROWS_AS(load_models(dir.string(), {std::string("0000000000000000"), nullptr}), ConfigError);
  enc::EncoderSet other = *w.enc;
  other.session_vocab = enc::Vocabulary({"something", "else"});
  CHECK_THROWS_AS(load_models(dir.string(), {std::nullopt, &other}), ConfigError);
  other = *w.enc;
  other.tag_map = enc::TagMap::from_pairs({{"a", "b"}});
  CHECK_THROWS_AS(load_models(dir.string(), {std::nullopt, &other}), ConfigError);
  CHECK_THROWS_AS(load_models((dir / "missing").string()), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("shared models predict safely from several threads") {
  World& w = world();
  for (ModelKind k : {ModelKind::relative_representation, ModelKind::knowledge_distillation,
                      ModelKind::generative_imputation, ModelKind::late_fusion}) {
    auto& model = *w.models.at(k);
    const auto serial = model.predict(w.split.test);
    std::vector<std::vector<Prediction>> got(4);
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < got.size(); ++t)
      pool.emplace_back([&, t] { got[t] = model.predict(w.split.test); });
    for (auto& t : pool) t.join();
    for (const auto& g : got) CHECK(g == serial);
  }
}
