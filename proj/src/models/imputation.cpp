#include <algorithm>
#include <map>

#include "mmrec/encoders/encoding.hpp"
#include "mmrec/error.hpp"
#include "mmrec/log.hpp"
#include "mmrec/models/training_data.hpp"
#include "mmrec/models/zoo.hpp"

namespace mmrec::models {

using nn::Index;
using nn::Real;

ImputationModel::ImputationModel(std::shared_ptr<const enc::EncoderSet> encoders, nn::Network<Real> joint,
                                 Neutral fill)
    : encoders_(std::move(encoders)), joint_(std::move(joint)), neutral_(std::move(fill)) {}

ImputationModel::ImputationModel(std::shared_ptr<const enc::EncoderSet> encoders, nn::Network<Real> joint,
                                 std::shared_ptr<Generative> imputers)
    : encoders_(std::move(encoders)), joint_(std::move(joint)), generative_(std::move(imputers)) {
  if (!generative_) throw ConfigError("generative imputation needs imputer networks");
}

ModelKind ImputationModel::kind() const noexcept {
  return neutral_ ? ModelKind::neutral_imputation : ModelKind::generative_imputation;
}

std::vector<std::pair<std::vector<double>, std::vector<double>>> ImputationModel::complete(
    const std::vector<data::UserRecord>& users) const {
  std::vector<std::optional<std::vector<double>>> conv(users.size()), sess(users.size());
  for (std::size_t i = 0; i < users.size(); ++i) {
    conv[i] = conversation_aggregate(users[i]);
    sess[i] = session_aggregate(users[i], encoders_->session_vocab);
    if (!conv[i] && !sess[i]) throw DataError("user '" + users[i].id + "' has no events to impute from");
  }
  if (neutral_) {
    for (std::size_t i = 0; i < users.size(); ++i) {
      if (!conv[i]) conv[i] = neutral_->conversation;
      if (!sess[i]) sess[i] = neutral_->session;
    }
  } else {
    std::vector<EncodedSequence> need_conv, need_sess;
    std::vector<std::size_t> at_conv, at_sess;
    for (std::size_t i = 0; i < users.size(); ++i) {
      if (!conv[i]) {
        need_conv.push_back(single_step(*sess[i]));
        at_conv.push_back(i);
      }
      if (!sess[i]) {
        need_sess.push_back(single_step(*conv[i]));
        at_sess.push_back(i);
      }
    }
    if (!need_conv.empty()) {
      const nn::Matrix<Real> p = generative_->to_conversation.predict(need_conv);
      for (std::size_t k = 0; k < at_conv.size(); ++k) conv[at_conv[k]] = row_of(p, static_cast<Index>(k));
    }
    if (!need_sess.empty()) {
      const nn::Matrix<Real> p = generative_->to_session.predict(need_sess);
      for (std::size_t k = 0; k < at_sess.size(); ++k) {
        std::vector<double> v = row_of(p, static_cast<Index>(k));
        for (double& x : v) x = x >= 0.5 ? 1.0 : 0.0;
        sess[at_sess[k]] = std::move(v);
      }
    }
  }
  std::vector<std::pair<std::vector<double>, std::vector<double>>> out;
  out.reserve(users.size());
  for (std::size_t i = 0; i < users.size(); ++i) out.emplace_back(std::move(*conv[i]), std::move(*sess[i]));
  return out;
}

std::vector<std::optional<EncodedSequence>> ImputationModel::joint_inputs(
    const std::vector<data::UserRecord>& users) const {
  std::vector<std::optional<EncodedSequence>> out;
  out.reserve(users.size());
  for (auto& [c, s] : complete(users)) out.emplace_back(single_step(concat(c, s)));
  return out;
}

std::vector<Prediction> ImputationModel::predict(const std::vector<data::UserRecord>& users) {
  std::lock_guard<std::mutex> guard(inference_mutex());
  std::vector<EncodedSequence> in;
  in.reserve(users.size());
  for (auto& x : joint_inputs(users)) in.push_back(std::move(*x));
  std::vector<Prediction> out(users.size());
  if (in.empty()) return out;
  const nn::Matrix<Real> p = joint_.predict(in);
  for (std::size_t i = 0; i < users.size(); ++i) out[i] = row_of(p, static_cast<Index>(i));
  return out;
}

ImputationModel::Neutral neutral_statistics(const std::vector<data::UserRecord>& train, const enc::Vocabulary& vocab,
                                            int embedding_dim) {
  ImputationModel::Neutral n;
  std::vector<std::vector<double>> convs;
  std::map<std::vector<double>, long> sessions;
  for (const data::UserRecord& u : train) {
    if (auto c = conversation_aggregate(u)) convs.push_back(std::move(*c));
    for (const data::Event& e : u.events)
      if (!e.is_conversation()) ++sessions[enc::encode_session(e.session(), vocab)];
  }
  n.conversation = convs.empty() ? std::vector<double>(static_cast<std::size_t>(embedding_dim), 0.0) : enc::mean_of(convs);
  n.session.assign(static_cast<std::size_t>(vocab.size()), 0.0);
  long best = 0;
  // std::map iterates in lexicographic order, so the first maximum wins ties
  for (const auto& [encoding, count] : sessions)
    if (count > best) {
      best = count;
      n.session = encoding;
    }
  return n;
}

namespace {

std::shared_ptr<ImputationModel> fit_joint(const TrainingContext& ctx, std::shared_ptr<ImputationModel> model,
                                           ModelKind kind, const Hyperparameters& h) {
  Examples tr = make_examples(*ctx.train, model->joint_inputs(*ctx.train), ctx.item_count);
  Examples va = make_examples(*ctx.valid, model->joint_inputs(*ctx.valid), ctx.item_count);
  const std::string name(display_name(kind));
  nn::TrainResult r = fit_network(model->joint(), tr.data, va.data, ctx.train_config(kind, h.batch_size), name.c_str());
  model->info().seed = ctx.seed;
  model->info().hyper = h;
  model->info().logs.emplace_back("joint", std::move(r));
  return model;
}

nn::Network<Real> joint_network(const TrainingContext& ctx, ModelKind kind, const Hyperparameters& h) {
  const enc::EncoderSet& e = *ctx.encoders;
  return nn::Network<Real>(model_spec(e.embedding_dim + e.session_vocab.size(), false, h, ctx.item_count),
                           ctx.network_seed(kind));
}

struct PairedData {
  nn::LabeledData<Real> to_conversation;
  nn::LabeledData<Real> to_session;
};

PairedData paired(const std::vector<data::UserRecord>& users, const enc::Vocabulary& vocab, Index dim) {
  PairedData d;
  std::vector<std::vector<double>> convs, sessions;
  for (const data::UserRecord& u : users) {
    auto c = conversation_aggregate(u);
    auto s = session_aggregate(u, vocab);
    if (!c || !s) continue;
    d.to_conversation.inputs.push_back(single_step(*s));
    d.to_session.inputs.push_back(single_step(*c));
    convs.push_back(std::move(*c));
    sessions.push_back(std::move(*s));
  }
  d.to_conversation.targets = to_matrix(convs, dim);
  d.to_session.targets = to_matrix(sessions, vocab.size());
  return d;
}

}  // namespace

std::shared_ptr<ImputationModel> fit_neutral_imputation(const TrainingContext& ctx) {
  ctx.validate();
  const ModelKind kind = ModelKind::neutral_imputation;
  const Hyperparameters h = ctx.hyper_for(kind);
  auto model = std::make_shared<ImputationModel>(
      ctx.encoders, joint_network(ctx, kind, h),
      neutral_statistics(*ctx.train, ctx.encoders->session_vocab, ctx.encoders->embedding_dim));
  return fit_joint(ctx, model, kind, h);
}

std::shared_ptr<ImputationModel> fit_generative_imputation(const TrainingContext& ctx) {
  ctx.validate();
  const ModelKind kind = ModelKind::generative_imputation;
  const Hyperparameters h = ctx.hyper_for(kind);
  const enc::EncoderSet& e = *ctx.encoders;
  const PairedData tr = paired(*ctx.train, e.session_vocab, e.embedding_dim);
  const PairedData va = paired(*ctx.valid, e.session_vocab, e.embedding_dim);
  if (tr.to_conversation.size() == 0)
    throw TrainingError("Generative Imputation needs intersection users in the training split");
  if (static_cast<std::size_t>(tr.to_conversation.size()) < kMinImputerUsers)
    log_warning("only " + std::to_string(tr.to_conversation.size()) +
                " intersection users to train the imputers; continuing");

  auto imputers = std::make_shared<ImputationModel::Generative>(ImputationModel::Generative{
      nn::Network<Real>(model_spec(e.session_vocab.size(), false, h, e.embedding_dim, std::nullopt,
                                   nn::LossKind::squared_error),
                        ctx.network_seed(kind, 1)),
      nn::Network<Real>(model_spec(e.embedding_dim, false, h, e.session_vocab.size()), ctx.network_seed(kind, 2))});
  nn::TrainResult rc = fit_network(imputers->to_conversation, tr.to_conversation, va.to_conversation,
                                   ctx.train_config(kind, h.batch_size, 1), "the conversation imputer");
  nn::TrainResult rs = fit_network(imputers->to_session, tr.to_session, va.to_session,
                                   ctx.train_config(kind, h.batch_size, 2), "the session imputer");
  auto model = std::make_shared<ImputationModel>(ctx.encoders, joint_network(ctx, kind, h), imputers);
  model->info().logs.emplace_back("imputer_conversation", std::move(rc));
  model->info().logs.emplace_back("imputer_session", std::move(rs));
  return fit_joint(ctx, model, kind, h);
}

void train_models(const TrainingContext& ctx, const std::vector<ModelKind>& kinds, ModelSet& models) {
  const auto neural = [&](ModelKind k) {
    if (!models.count(k)) models[k] = fit_neural(k, ctx);
    return std::static_pointer_cast<NeuralModel>(models.at(k));
  };
  for (ModelKind k : kinds) {
    if (models.count(k)) continue;
    switch (k) {
      case ModelKind::popular: models[k] = fit_popular(ctx); break;
      case ModelKind::late_fusion:
        models[k] = make_late_fusion(neural(ModelKind::conversation), neural(ModelKind::web_session));
        break;
      case ModelKind::knowledge_distillation:
        models[k] = fit_distillation(ctx, neural(ModelKind::conversation), neural(ModelKind::web_session));
        break;
      case ModelKind::generative_imputation: models[k] = fit_generative_imputation(ctx); break;
      case ModelKind::neutral_imputation: models[k] = fit_neutral_imputation(ctx); break;
      default: neural(k); break;
    }
  }
}

}  // namespace mmrec::models
