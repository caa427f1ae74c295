#include "mmrec/models/model_kind.hpp"

#include <string>

#include "mmrec/error.hpp"

namespace mmrec::models {

std::string_view display_name(ModelKind k) noexcept {
  switch (k) {
    case ModelKind::popular: return "Popular";
    case ModelKind::conversation: return "Conversation";
    case ModelKind::web_session: return "Web Session";
    case ModelKind::late_fusion: return "Late Fusion";
    case ModelKind::knowledge_distillation: return "Knowledge Distillation";
    case ModelKind::generative_imputation: return "Generative Imputation";
    case ModelKind::neutral_imputation: return "Neutral Imputation";
    case ModelKind::keyword: return "Keyword";
    case ModelKind::latent_feature: return "Latent Feature";
    case ModelKind::relative_representation: return "Relative Representation";
  }
  return "";
}

std::string_view slug(ModelKind k) noexcept {
  switch (k) {
    case ModelKind::popular: return "popular";
    case ModelKind::conversation: return "conversation";
    case ModelKind::web_session: return "web_session";
    case ModelKind::late_fusion: return "late_fusion";
    case ModelKind::knowledge_distillation: return "knowledge_distillation";
    case ModelKind::generative_imputation: return "generative_imputation";
    case ModelKind::neutral_imputation: return "neutral_imputation";
    case ModelKind::keyword: return "keyword";
    case ModelKind::latent_feature: return "latent_feature";
    case ModelKind::relative_representation: return "relative_representation";
  }
  return "";
}

ModelKind parse_model_kind(std::string_view s) {
  for (ModelKind k : kAllModels)
    if (slug(k) == s || display_name(k) == s) return k;
  throw ConfigError("unknown model '" + std::string(s) + "'");
}

std::vector<ModelKind> dependencies(ModelKind k) {
  if (k == ModelKind::late_fusion || k == ModelKind::knowledge_distillation)
    return {ModelKind::conversation, ModelKind::web_session};
  return {};
}

Hyperparameters default_hyperparameters(ModelKind k) {
  switch (k) {
    case ModelKind::conversation: return {512, 64, 0.2};
    case ModelKind::web_session: return {256, 256, 0.3};
    case ModelKind::knowledge_distillation: return {256, 128, 0.4};
    case ModelKind::generative_imputation: return {128, 256, 0.2};
    case ModelKind::neutral_imputation: return {128, 128, 0.2};
    case ModelKind::keyword: return {512, 256, 0.2};
    case ModelKind::latent_feature: return {512, 256, 0.3};
    case ModelKind::relative_representation: return {256, 256, 0.3};
    case ModelKind::popular:
    case ModelKind::late_fusion: return {};
  }
  return {};
}

bool has_network(ModelKind k) noexcept { return k != ModelKind::popular && k != ModelKind::late_fusion; }

}  // namespace mmrec::models
