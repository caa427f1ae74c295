#include "mmrec/error.hpp"
#include "mmrec/models/training_data.hpp"
#include "mmrec/models/zoo.hpp"

namespace mmrec::models {

using nn::Index;
using nn::Real;

DistillationModel::DistillationModel(std::shared_ptr<const enc::EncoderSet> encoders, nn::Network<Real> student,
                                     std::shared_ptr<NeuralModel> conversation, std::shared_ptr<NeuralModel> session)
    : encoders_(std::move(encoders)),
      student_(std::move(student)),
      conversation_(std::move(conversation)),
      session_(std::move(session)) {
  if (!conversation_ || conversation_->kind() != ModelKind::conversation || !session_ ||
      session_->kind() != ModelKind::web_session)
    throw ConfigError("Knowledge Distillation needs Conversation and Web Session teachers");
}

std::vector<std::optional<EncodedSequence>> DistillationModel::student_inputs(
    const std::vector<data::UserRecord>& users) const {
  std::vector<std::optional<EncodedSequence>> out(users.size());
  for (std::size_t i = 0; i < users.size(); ++i) {
    auto c = conversation_aggregate(users[i]);
    auto s = session_aggregate(users[i], encoders_->session_vocab);
    if (c && s) out[i] = single_step(concat(*c, *s));
  }
  return out;
}

std::vector<Prediction> DistillationModel::predict(const std::vector<data::UserRecord>& users) {
  std::lock_guard<std::mutex> guard(inference_mutex());
  const auto in = student_inputs(users);
  std::vector<Prediction> c = conversation_->predict(users);
  std::vector<Prediction> s = session_->predict(users);
  std::vector<EncodedSequence> joint;
  std::vector<std::size_t> where;
  std::vector<Prediction> out(users.size());
  for (std::size_t i = 0; i < users.size(); ++i) {
    if (in[i]) {
      joint.push_back(*in[i]);
      where.push_back(i);
    } else if (c[i]) {
      out[i] = std::move(c[i]);
    } else if (s[i]) {
      out[i] = std::move(s[i]);
    }
  }
  if (!joint.empty()) {
    const nn::Matrix<Real> p = student_.predict(joint);
    for (std::size_t k = 0; k < where.size(); ++k) out[where[k]] = row_of(p, static_cast<Index>(k));
  }
  return out;
}

namespace {

/// Student examples with the teachers' probabilities as soft targets.
nn::LabeledData<Real> distillation_data(DistillationModel& m, NeuralModel& conv, NeuralModel& sess,
                                        const std::vector<data::UserRecord>& users, int item_count, double alpha,
                                        double beta) {
  const auto in = m.student_inputs(users);
  std::vector<data::UserRecord> inter;
  for (std::size_t i = 0; i < users.size(); ++i)
    if (in[i]) inter.push_back(users[i]);
  Examples ex = make_examples(users, in, item_count);
  const std::vector<Prediction> pc = conv.predict(inter);
  const std::vector<Prediction> ps = sess.predict(inter);
  std::vector<std::vector<double>> rc, rs;
  for (std::size_t i = 0; i < inter.size(); ++i) {
    rc.push_back(pc[i].value());
    rs.push_back(ps[i].value());
  }
  ex.data.soft.push_back({static_cast<Real>(alpha), to_matrix(rc, item_count)});
  ex.data.soft.push_back({static_cast<Real>(beta), to_matrix(rs, item_count)});
  return std::move(ex.data);
}

}  // namespace

std::shared_ptr<DistillationModel> fit_distillation(const TrainingContext& ctx, std::shared_ptr<NeuralModel> conversation,
                                                    std::shared_ptr<NeuralModel> session) {
  ctx.validate();
  const ModelKind kind = ModelKind::knowledge_distillation;
  const Hyperparameters h = ctx.hyper_for(kind);
  const enc::EncoderSet& e = *ctx.encoders;
  const nn::NetworkSpec spec = model_spec(e.embedding_dim + e.session_vocab.size(), false, h, ctx.item_count);
  auto model = std::make_shared<DistillationModel>(ctx.encoders, nn::Network<Real>(spec, ctx.network_seed(kind)),
                                                   conversation, session);
  const auto tr = distillation_data(*model, *conversation, *session, *ctx.train, ctx.item_count, ctx.kd_alpha,
                                    ctx.kd_beta);
  if (tr.size() == 0) throw TrainingError("Knowledge Distillation needs intersection users in the training split");
  const auto va = distillation_data(*model, *conversation, *session, *ctx.valid, ctx.item_count, ctx.kd_alpha,
                                    ctx.kd_beta);
  nn::TrainResult r =
      fit_network(model->student(), tr, va, ctx.train_config(kind, h.batch_size), "Knowledge Distillation");
  model->info().seed = ctx.seed;
  model->info().hyper = h;
  model->info().logs.emplace_back("student", std::move(r));
  return model;
}

}  // namespace mmrec::models
