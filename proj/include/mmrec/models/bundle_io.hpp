#pragma once

#include <optional>
#include <string>

#include "mmrec/models/zoo.hpp"
#include "json.hpp"

namespace mmrec::models {

inline constexpr int kBundleVersion = 1;

/// What a bundle must agree with when it is loaded.
struct BundleExpectations {
  std::optional<std::string> dataset_fingerprint;
  const enc::EncoderSet* encoders = nullptr;  // vocabulary and tag-map hashes
};

/// Writes each model to dir/<slug>/: manifest.json plus checkpoint files.
/// Composite models refer to their sub-models by slug.
void save_models(const std::string& dir, const ModelSet& models, const std::string& dataset_fingerprint);

/// Loads every model found under `dir`. Throws ConfigError when a bundle
/// does not match the expectations or its own recorded hashes.
ModelSet load_models(const std::string& dir, const BundleExpectations& expect = {});

nlohmann::json spec_to_json(const nn::NetworkSpec& spec);
nn::NetworkSpec spec_from_json(const nlohmann::json& j);
nlohmann::json train_result_to_json(const nn::TrainResult& r);

}  // namespace mmrec::models
