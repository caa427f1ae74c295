#include <algorithm>

#include "mmrec/error.hpp"
#include "mmrec/models/training_data.hpp"
#include "mmrec/models/zoo.hpp"

namespace mmrec::models {

using nn::Index;
using nn::Real;

void TrainingContext::validate() const {
  if (train == nullptr || valid == nullptr) throw ConfigError("training context needs train and validation users");
  if (item_count < 1) throw ConfigError("item count must be positive");
  if (!encoders) throw ConfigError("training context needs fitted encoders");
  if (max_epochs < 1 || patience < 1) throw ConfigError("max_epochs and patience must be positive");
  if (kd_alpha < 0.0 || kd_beta < 0.0) throw ConfigError("distillation weights must be non-negative");
  for (const auto& [kind, h] : hyper)
    if (h.batch_size < 1 || h.units < 1 || !(h.dropout >= 0.0 && h.dropout < 1.0))
      throw ConfigError("invalid hyperparameters for " + std::string(display_name(kind)));
}

std::uint64_t TrainingContext::network_seed(ModelKind k, int sub) const {
  std::uint64_t x = seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(k) * 131 + static_cast<std::uint64_t>(sub);
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

nn::TrainConfig TrainingContext::train_config(ModelKind k, Index batch_size, int sub) const {
  nn::TrainConfig cfg;
  cfg.batch_size = batch_size;
  cfg.max_epochs = max_epochs;
  cfg.patience = patience;
  cfg.adam = adam;
  cfg.seed = network_seed(k, sub);
  return cfg;
}

std::vector<Prediction> PopularModel::predict(const std::vector<data::UserRecord>& users) {
  return std::vector<Prediction>(users.size(), scores_);
}

std::shared_ptr<PopularModel> fit_popular(const TrainingContext& ctx) {
  ctx.validate();
  if (ctx.train->empty()) throw TrainingError("Popular needs a non-empty training split");
  const std::vector<int> counts = data::purchase_counts(*ctx.train, ctx.item_count);
  std::vector<double> scores(counts.size());
  const double n = static_cast<double>(ctx.train->size());
  for (std::size_t j = 0; j < counts.size(); ++j) scores[j] = (counts[j] + 1.0) / (n + 2.0);
  auto m = std::make_shared<PopularModel>(std::move(scores));
  m->info().seed = ctx.seed;
  return m;
}

NeuralModel::NeuralModel(ModelKind kind, std::shared_ptr<const enc::EncoderSet> encoders, nn::Network<Real> net)
    : kind_(kind), encoders_(std::move(encoders)), net_(std::move(net)) {
  switch (kind) {
    case ModelKind::conversation:
    case ModelKind::web_session:
    case ModelKind::keyword:
    case ModelKind::latent_feature:
    case ModelKind::relative_representation: break;
    default: throw ConfigError(std::string(display_name(kind)) + " is not a single-network model");
  }
  if (!encoders_) throw ConfigError("model needs fitted encoders");
  if (kind == ModelKind::relative_representation && !encoders_->anchors)
    throw ConfigError("Relative Representation needs fitted anchors");
}

std::vector<std::optional<EncodedSequence>> NeuralModel::inputs(const std::vector<data::UserRecord>& users) const {
  switch (kind_) {
    case ModelKind::conversation: {
      std::vector<std::optional<EncodedSequence>> out(users.size());
      for (std::size_t i = 0; i < users.size(); ++i)
        if (auto v = conversation_aggregate(users[i])) out[i] = single_step(std::move(*v));
      return out;
    }
    case ModelKind::web_session: return enc::build_sequences(users, enc::EncoderMode::session_only, *encoders_);
    case ModelKind::keyword: return enc::build_sequences(users, enc::EncoderMode::keyword, *encoders_);
    case ModelKind::latent_feature: return enc::build_sequences(users, enc::EncoderMode::latent, *encoders_);
    case ModelKind::relative_representation:
      return enc::build_sequences(users, enc::EncoderMode::relative, *encoders_);
    default: break;
  }
  return {};
}

namespace {

std::vector<Prediction> predict_present(nn::Network<Real>& net, const std::vector<std::optional<EncodedSequence>>& in) {
  std::vector<EncodedSequence> present;
  std::vector<std::size_t> where;
  for (std::size_t i = 0; i < in.size(); ++i)
    if (in[i]) {
      present.push_back(*in[i]);
      where.push_back(i);
    }
  std::vector<Prediction> out(in.size());
  if (present.empty()) return out;
  const nn::Matrix<Real> p = net.predict(present);
  for (std::size_t k = 0; k < where.size(); ++k) out[where[k]] = row_of(p, static_cast<Index>(k));
  return out;
}

}  // namespace

std::vector<Prediction> NeuralModel::predict(const std::vector<data::UserRecord>& users) {
  std::lock_guard<std::mutex> guard(inference_mutex());
  return predict_present(net_, inputs(users));
}

std::vector<double> fuse_mean(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw DataError("cannot fuse predictions of different lengths");
  std::vector<double> m(a.size());
  for (std::size_t j = 0; j < m.size(); ++j) m[j] = (a[j] + b[j]) / 2.0;
  return m;
}

LateFusionModel::LateFusionModel(std::shared_ptr<NeuralModel> conversation, std::shared_ptr<NeuralModel> session)
    : conversation_(std::move(conversation)), session_(std::move(session)) {
  if (!conversation_ || conversation_->kind() != ModelKind::conversation || !session_ ||
      session_->kind() != ModelKind::web_session)
    throw ConfigError("Late Fusion needs a Conversation and a Web Session model");
}

std::vector<Prediction> LateFusionModel::predict(const std::vector<data::UserRecord>& users) {
  std::vector<Prediction> c = conversation_->predict(users);
  std::vector<Prediction> s = session_->predict(users);
  std::vector<Prediction> out(users.size());
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (c[i] && s[i]) {
      out[i] = fuse_mean(*c[i], *s[i]);
    } else if (c[i]) {
      out[i] = std::move(c[i]);
    } else if (s[i]) {
      out[i] = std::move(s[i]);
    }
  }
  return out;
}

std::shared_ptr<LateFusionModel> make_late_fusion(std::shared_ptr<NeuralModel> conversation,
                                                  std::shared_ptr<NeuralModel> session) {
  auto m = std::make_shared<LateFusionModel>(conversation, session);
  m->info().seed = conversation->info().seed;
  return m;
}

std::shared_ptr<NeuralModel> fit_neural(ModelKind kind, const TrainingContext& ctx) {
  ctx.validate();
  const Hyperparameters h = ctx.hyper_for(kind);
  std::shared_ptr<const enc::EncoderSet> encoders = ctx.encoders;
  if (kind == ModelKind::relative_representation && !encoders->anchors) encoders = with_anchors(ctx);
  const enc::EncoderSet& e = *encoders;

  nn::NetworkSpec spec;
  switch (kind) {
    case ModelKind::conversation:
      spec = model_spec(e.embedding_dim, false, h, ctx.item_count);
      break;
    case ModelKind::web_session:
      spec = model_spec(e.session_vocab.size(), true, h, ctx.item_count);
      break;
    case ModelKind::keyword:
      spec = model_spec(e.shared_vocab.size(), true, h, ctx.item_count);
      break;
    case ModelKind::latent_feature:
      spec = model_spec(h.units, true, h, ctx.item_count,
                        nn::LatentMapSpec{e.embedding_dim, e.session_vocab.size(), h.units});
      break;
    case ModelKind::relative_representation:
      spec = model_spec(e.anchors->anchors.size(), true, h, ctx.item_count);
      break;
    default: throw ConfigError(std::string(display_name(kind)) + " is not a single-network model");
  }
  auto model = std::make_shared<NeuralModel>(kind, encoders, nn::Network<Real>(spec, ctx.network_seed(kind)));
  const Examples tr = make_examples(*ctx.train, model->inputs(*ctx.train), ctx.item_count);
  const Examples va = make_examples(*ctx.valid, model->inputs(*ctx.valid), ctx.item_count);
  const std::string name(display_name(kind));
  nn::TrainResult r =
      fit_network(model->network(), tr.data, va.data, ctx.train_config(kind, h.batch_size), name.c_str());
  model->info().seed = ctx.seed;
  model->info().hyper = h;
  if (kind == ModelKind::relative_representation) {
    model->info().logs.emplace_back("anchor_conversation", encoders->anchors->nets.conversation_log);
    model->info().logs.emplace_back("anchor_session", encoders->anchors->nets.session_log);
  }
  model->info().logs.emplace_back("model", std::move(r));
  return model;
}

std::shared_ptr<enc::EncoderSet> with_anchors(const TrainingContext& ctx) {
  auto e = std::make_shared<enc::EncoderSet>(*ctx.encoders);
  enc::AnchorConfig cfg = ctx.anchor;
  cfg.train.max_epochs = ctx.max_epochs;
  cfg.train.patience = ctx.patience;
  cfg.train.adam = ctx.adam;
  cfg.train.seed = ctx.network_seed(ModelKind::relative_representation, 1);
  auto am = std::make_shared<enc::AnchorModel>();
  am->nets = enc::fit_anchor_networks(*ctx.train, *ctx.valid, e->session_vocab, e->embedding_dim, ctx.item_count, cfg);
  am->anchors = enc::select_anchors(*ctx.train, am->nets, e->session_vocab, ctx.item_count, cfg.anchor_count,
                                    ctx.network_seed(ModelKind::relative_representation, 2));
  e->anchors = am;
  return e;
}

}  // namespace mmrec::models
