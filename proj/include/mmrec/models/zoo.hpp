#pragma once

#include <map>
#include <memory>
#include <vector>

#include "mmrec/models/recommender.hpp"
#include "mmrec/nn/network.hpp"

namespace mmrec::models {

/// Normalized training purchase counts, (count + 1) / (users + 2); the same
/// vector for every user.
class PopularModel : public Recommender {
 public:
  explicit PopularModel(std::vector<double> scores) : scores_(std::move(scores)) {}
  ModelKind kind() const noexcept override { return ModelKind::popular; }
  std::vector<Prediction> predict(const std::vector<data::UserRecord>& users) override;
  const std::vector<double>& scores() const noexcept { return scores_; }

 private:
  std::vector<double> scores_;
};

/// One network over one input encoding: Conversation, Web Session, Keyword,
/// Latent Feature and Relative Representation.
class NeuralModel : public Recommender {
 public:
  NeuralModel(ModelKind kind, std::shared_ptr<const enc::EncoderSet> encoders, nn::Network<nn::Real> net);
  ModelKind kind() const noexcept override { return kind_; }
  std::vector<Prediction> predict(const std::vector<data::UserRecord>& users) override;

  /// Network input per user; nullopt when the user lacks the modality.
  std::vector<std::optional<EncodedSequence>> inputs(const std::vector<data::UserRecord>& users) const;
  nn::Network<nn::Real>& network() noexcept { return net_; }
  const nn::Network<nn::Real>& network() const noexcept { return net_; }
  const std::shared_ptr<const enc::EncoderSet>& encoders() const noexcept { return encoders_; }

 private:
  ModelKind kind_;
  std::shared_ptr<const enc::EncoderSet> encoders_;
  nn::Network<nn::Real> net_;
};

/// Element-wise arithmetic mean of two equal-length vectors.
std::vector<double> fuse_mean(const std::vector<double>& a, const std::vector<double>& b);

/// Conversation-only users get the conversation model's output, session-only
/// users the session model's, intersection users the element-wise mean.
class LateFusionModel : public Recommender {
 public:
  LateFusionModel(std::shared_ptr<NeuralModel> conversation, std::shared_ptr<NeuralModel> session);
  ModelKind kind() const noexcept override { return ModelKind::late_fusion; }
  std::vector<Prediction> predict(const std::vector<data::UserRecord>& users) override;

 private:
  std::shared_ptr<NeuralModel> conversation_;
  std::shared_ptr<NeuralModel> session_;
};

/// Joint student for intersection users; teachers answer for the rest.
class DistillationModel : public Recommender {
 public:
  DistillationModel(std::shared_ptr<const enc::EncoderSet> encoders, nn::Network<nn::Real> student,
                    std::shared_ptr<NeuralModel> conversation, std::shared_ptr<NeuralModel> session);
  ModelKind kind() const noexcept override { return ModelKind::knowledge_distillation; }
  std::vector<Prediction> predict(const std::vector<data::UserRecord>& users) override;

  /// Student input for intersection users.
  std::vector<std::optional<EncodedSequence>> student_inputs(const std::vector<data::UserRecord>& users) const;
  nn::Network<nn::Real>& student() noexcept { return student_; }
  const nn::Network<nn::Real>& student() const noexcept { return student_; }

 private:
  std::shared_ptr<const enc::EncoderSet> encoders_;
  nn::Network<nn::Real> student_;
  std::shared_ptr<NeuralModel> conversation_;
  std::shared_ptr<NeuralModel> session_;
};

/// Fills the missing modality, then scores the concatenated
/// [conversation aggregate, session aggregate] with a joint network.
class ImputationModel : public Recommender {
 public:
  struct Neutral {
    std::vector<double> conversation;  // mean training conversation embedding
    std::vector<double> session;       // most frequent training session encoding
  };
  struct Generative {
    nn::Network<nn::Real> to_conversation;  // session aggregate -> embedding
    nn::Network<nn::Real> to_session;       // embedding -> session encoding
  };

  ImputationModel(std::shared_ptr<const enc::EncoderSet> encoders, nn::Network<nn::Real> joint, Neutral fill);
  ImputationModel(std::shared_ptr<const enc::EncoderSet> encoders, nn::Network<nn::Real> joint,
                  std::shared_ptr<Generative> imputers);
  ModelKind kind() const noexcept override;
  std::vector<Prediction> predict(const std::vector<data::UserRecord>& users) override;

  /// (conversation, session) parts after imputation, for every user.
  std::vector<std::pair<std::vector<double>, std::vector<double>>> complete(
      const std::vector<data::UserRecord>& users) const;
  std::vector<std::optional<EncodedSequence>> joint_inputs(const std::vector<data::UserRecord>& users) const;

  nn::Network<nn::Real>& joint() noexcept { return joint_; }
  const nn::Network<nn::Real>& joint() const noexcept { return joint_; }
  const std::optional<Neutral>& neutral() const noexcept { return neutral_; }
  const std::shared_ptr<Generative>& generative() const noexcept { return generative_; }

 private:
  std::shared_ptr<const enc::EncoderSet> encoders_;
  nn::Network<nn::Real> joint_;
  std::optional<Neutral> neutral_;
  std::shared_ptr<Generative> generative_;
};

/// Imputers need this many intersection users to train without a warning.
inline constexpr std::size_t kMinImputerUsers = 100;

std::shared_ptr<PopularModel> fit_popular(const TrainingContext& ctx);
std::shared_ptr<NeuralModel> fit_neural(ModelKind kind, const TrainingContext& ctx);
std::shared_ptr<LateFusionModel> make_late_fusion(std::shared_ptr<NeuralModel> conversation,
                                                  std::shared_ptr<NeuralModel> session);
std::shared_ptr<DistillationModel> fit_distillation(const TrainingContext& ctx,
                                                    std::shared_ptr<NeuralModel> conversation,
                                                    std::shared_ptr<NeuralModel> session);
std::shared_ptr<ImputationModel> fit_neutral_imputation(const TrainingContext& ctx);
std::shared_ptr<ImputationModel> fit_generative_imputation(const TrainingContext& ctx);

/// Neutral fill-ins from the training users.
ImputationModel::Neutral neutral_statistics(const std::vector<data::UserRecord>& train, const enc::Vocabulary& vocab,
                                            int embedding_dim);

/// Encoders with a freshly fitted anchor model (networks + anchor set).
/// fit_neural reuses anchors already present in the context's encoders.
std::shared_ptr<enc::EncoderSet> with_anchors(const TrainingContext& ctx);

using ModelSet = std::map<ModelKind, std::shared_ptr<Recommender>>;

/// Trains `kinds` (and whatever they depend on) into `models`, skipping
/// kinds already present.
void train_models(const TrainingContext& ctx, const std::vector<ModelKind>& kinds, ModelSet& models);

}  // namespace mmrec::models
