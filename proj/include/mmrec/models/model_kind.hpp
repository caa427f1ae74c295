#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "mmrec/nn/tensor.hpp"

namespace mmrec::models {

enum class ModelKind {
  popular,
  conversation,
  web_session,
  late_fusion,
  knowledge_distillation,
  generative_imputation,
  neutral_imputation,
  keyword,
  latent_feature,
  relative_representation,
};

inline constexpr std::array<ModelKind, 10> kAllModels = {
    ModelKind::popular,          ModelKind::conversation,           ModelKind::web_session,
    ModelKind::late_fusion,      ModelKind::knowledge_distillation, ModelKind::generative_imputation,
    ModelKind::neutral_imputation, ModelKind::keyword,              ModelKind::latent_feature,
    ModelKind::relative_representation,
};

/// "Web Session"
std::string_view display_name(ModelKind k) noexcept;
/// "web_session"
std::string_view slug(ModelKind k) noexcept;
/// Accepts the slug or the display name.
ModelKind parse_model_kind(std::string_view s);

/// Models that must be trained first (teachers, fused sub-models).
std::vector<ModelKind> dependencies(ModelKind k);

struct Hyperparameters {
  nn::Index batch_size = 256;
  nn::Index units = 256;
  double dropout = 0.3;

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

Hyperparameters default_hyperparameters(ModelKind k);
/// Whether the model has its own network to train and tune.
bool has_network(ModelKind k) noexcept;

}  // namespace mmrec::models
