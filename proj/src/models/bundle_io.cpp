#include "mmrec/models/bundle_io.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include "mmrec/error.hpp"
#include "mmrec/nn/checkpoint.hpp"

namespace mmrec::models {

namespace fs = std::filesystem;
using nlohmann::json;
using nn::Real;

json spec_to_json(const nn::NetworkSpec& spec) {
  json layers = json::array();
  for (const nn::LayerSpec& l : spec.layers)
    layers.push_back({{"kind", l.kind == nn::LayerKind::gru ? "gru" : "dense"},
                      {"in", l.input_width},
                      {"out", l.output_width},
                      {"activation", nn::to_string(l.activation)},
                      {"dropout", l.dropout},
                      {"bias", l.has_bias}});
  json j = {{"input_width", spec.input_width}, {"loss", nn::to_string(spec.loss)}, {"layers", layers}};
  if (spec.latent_map)
    j["latent_map"] = {{"conversation", spec.latent_map->conversation_width},
                       {"session", spec.latent_map->session_width},
                       {"latent", spec.latent_map->latent_width}};
  return j;
}

nn::NetworkSpec spec_from_json(const json& j) {
  nn::NetworkSpec spec;
  try {
    spec.input_width = j.at("input_width").get<nn::Index>();
    const std::string loss = j.at("loss").get<std::string>();
    if (loss == nn::to_string(nn::LossKind::bce_multilabel)) spec.loss = nn::LossKind::bce_multilabel;
    else if (loss == nn::to_string(nn::LossKind::squared_error)) spec.loss = nn::LossKind::squared_error;
    else throw ConfigError("unknown loss '" + loss + "'");
    for (const json& l : j.at("layers")) {
      nn::LayerSpec s;
      s.kind = l.at("kind").get<std::string>() == "gru" ? nn::LayerKind::gru : nn::LayerKind::dense;
      s.input_width = l.at("in").get<nn::Index>();
      s.output_width = l.at("out").get<nn::Index>();
      s.activation = nn::parse_activation(l.at("activation").get<std::string>());
      s.dropout = l.at("dropout").get<double>();
      s.has_bias = l.at("bias").get<bool>();
      spec.layers.push_back(s);
    }
    if (j.contains("latent_map")) {
      const json& m = j.at("latent_map");
      spec.latent_map = nn::LatentMapSpec{m.at("conversation").get<nn::Index>(), m.at("session").get<nn::Index>(),
                                          m.at("latent").get<nn::Index>()};
    }
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed network spec: ") + e.what());
  }
  spec.validate();
  return spec;
}

json train_result_to_json(const nn::TrainResult& r) {
  json epochs = json::array();
  for (const nn::EpochRecord& e : r.log) epochs.push_back({e.epoch, e.train_loss, e.valid_loss});
  return {{"best_epoch", r.best_epoch}, {"best_valid_loss", r.best_valid_loss}, {"epochs", epochs}};
}

namespace {

nn::TrainResult train_result_from_json(const json& j) {
  nn::TrainResult r;
  r.best_epoch = j.at("best_epoch").get<int>();
  r.best_valid_loss = j.at("best_valid_loss").get<double>();
  for (const json& e : j.at("epochs")) r.log.push_back({e.at(0).get<int>(), e.at(1).get<double>(), e.at(2).get<double>()});
  return r;
}

json encoders_to_json(const enc::EncoderSet& e) {
  json j = {{"embedding_dim", e.embedding_dim},
            {"session_vocab", e.session_vocab.tokens()},
            {"session_vocab_hash", e.session_vocab.hash()},
            {"shared_vocab", e.shared_vocab.tokens()},
            {"shared_vocab_hash", e.shared_vocab.hash()},
            {"tag_map_hash", e.tag_map.hash()}};
  if (e.tag_map.identity()) {
    j["tag_map"] = nullptr;
  } else {
    json m = json::object();
    for (const auto& [k, v] : e.tag_map.entries()) m[k] = v;
    j["tag_map"] = m;
  }
  if (e.anchors) j["anchor_ids"] = e.anchors->anchors.user_ids;
  return j;
}

enc::EncoderSet encoders_from_json(const json& j) {
  enc::EncoderSet e;
  e.embedding_dim = j.at("embedding_dim").get<int>();
  e.session_vocab = enc::Vocabulary(j.at("session_vocab").get<std::vector<std::string>>());
  e.shared_vocab = enc::Vocabulary(j.at("shared_vocab").get<std::vector<std::string>>());
  if (!j.at("tag_map").is_null()) {
    std::vector<std::pair<std::string, std::string>> pairs;
    for (const auto& [k, v] : j.at("tag_map").items()) pairs.emplace_back(k, v.get<std::string>());
    e.tag_map = enc::TagMap::from_pairs(std::move(pairs));
  }
  if (e.session_vocab.hash() != j.at("session_vocab_hash").get<std::string>() ||
      e.shared_vocab.hash() != j.at("shared_vocab_hash").get<std::string>() ||
      e.tag_map.hash() != j.at("tag_map_hash").get<std::string>())
    throw ConfigError("bundle encoder hashes do not match their stored contents");
  return e;
}

void write_json(const fs::path& path, const json& j) {
  std::ofstream os(path);
  if (!os) throw IoError("cannot write " + path.string());
  os << j.dump(2) << '\n';
  if (!os) throw IoError("write failed: " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream is(path);
  if (!is) throw IoError("cannot open " + path.string());
  try {
    return json::parse(is);
  } catch (const json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

void save_network(const fs::path& dir, const std::string& name, const nn::Network<Real>& net, json& manifest) {
  nn::save_checkpoint((dir / (name + ".ckpt")).string(), nn::export_parameters(net));
  manifest["networks"][name] = spec_to_json(net.spec());
}

nn::Network<Real> load_network(const fs::path& dir, const std::string& name, const json& manifest) {
  if (!manifest.at("networks").contains(name)) throw DataError("bundle lacks network '" + name + "'");
  nn::Network<Real> net(spec_from_json(manifest.at("networks").at(name)), 0);
  nn::import_parameters(net, nn::load_checkpoint((dir / (name + ".ckpt")).string()));
  return net;
}

nn::Matrix<double> tensor(const std::vector<nn::NamedTensor>& ts, const std::string& name) {
  for (const nn::NamedTensor& t : ts)
    if (t.name == name) return t.values;
  throw DataError("checkpoint lacks tensor '" + name + "'");
}

std::vector<double> as_vector(const nn::Matrix<double>& m) { return std::vector<double>(m.data(), m.data() + m.size()); }

nn::Matrix<double> as_row(const std::vector<double>& v) {
  nn::Matrix<double> m(1, static_cast<nn::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) m(0, static_cast<nn::Index>(i)) = v[i];
  return m;
}

const enc::EncoderSet* encoders_of(const Recommender& m) {
  if (const auto* n = dynamic_cast<const NeuralModel*>(&m)) return n->encoders().get();
  return nullptr;
}

void save_one(const fs::path& dir, const Recommender& model, const std::string& fingerprint,
              const enc::EncoderSet* shared) {
  fs::create_directories(dir);
  const TrainInfo& info = model.info();
  json manifest = {{"format", "mmrec-bundle"},
                   {"version", kBundleVersion},
                   {"kind", slug(model.kind())},
                   {"seed", info.seed},
                   {"hyper", {{"batch_size", info.hyper.batch_size}, {"units", info.hyper.units}, {"dropout", info.hyper.dropout}}},
                   {"dataset_fingerprint", fingerprint},
                   {"networks", json::object()},
                   {"depends", json::array()}};
  json logs = json::array();
  for (const auto& [name, r] : info.logs) logs.push_back({{"name", name}, {"result", train_result_to_json(r)}});
  manifest["logs"] = logs;

  const enc::EncoderSet* e = encoders_of(model);
  if (e == nullptr) e = shared;
  if (e != nullptr) manifest["encoders"] = encoders_to_json(*e);

  if (const auto* p = dynamic_cast<const PopularModel*>(&model)) {
    nn::save_checkpoint((dir / "popular.ckpt").string(), {{"popular.scores", as_row(p->scores())}});
  } else if (auto* n = dynamic_cast<const NeuralModel*>(&model)) {
    save_network(dir, "model", n->network(), manifest);
    if (n->kind() == ModelKind::relative_representation) {
      const enc::AnchorModel& am = *n->encoders()->anchors;
      save_network(dir, "anchor_conversation", am.nets.conversation, manifest);
      save_network(dir, "anchor_session", am.nets.session, manifest);
      nn::save_checkpoint((dir / "anchors.ckpt").string(),
                          {{"anchors.conversation", am.anchors.conversation}, {"anchors.session", am.anchors.session}});
    }
  } else if (model.kind() == ModelKind::late_fusion) {
    manifest["depends"] = {slug(ModelKind::conversation), slug(ModelKind::web_session)};
  } else if (auto* d = dynamic_cast<const DistillationModel*>(&model)) {
    manifest["depends"] = {slug(ModelKind::conversation), slug(ModelKind::web_session)};
    save_network(dir, "student", d->student(), manifest);
  } else if (auto* im = dynamic_cast<const ImputationModel*>(&model)) {
    save_network(dir, "joint", im->joint(), manifest);
    if (im->neutral()) {
      nn::save_checkpoint((dir / "neutral.ckpt").string(), {{"neutral.conversation", as_row(im->neutral()->conversation)},
                                                             {"neutral.session", as_row(im->neutral()->session)}});
    } else {
      save_network(dir, "imputer_conversation", im->generative()->to_conversation, manifest);
      save_network(dir, "imputer_session", im->generative()->to_session, manifest);
    }
  }
  write_json(dir / "manifest.json", manifest);
}

void check_expectations(const json& manifest, const enc::EncoderSet* loaded, const BundleExpectations& expect,
                        const std::string& where) {
  if (expect.dataset_fingerprint && manifest.at("dataset_fingerprint").get<std::string>() != *expect.dataset_fingerprint)
    throw ConfigError(where + ": trained on a different dataset (fingerprint " +
                      manifest.at("dataset_fingerprint").get<std::string>() + ", expected " +
                      *expect.dataset_fingerprint + ")");
  if (expect.encoders && loaded) {
    if (loaded->session_vocab.hash() != expect.encoders->session_vocab.hash() ||
        loaded->shared_vocab.hash() != expect.encoders->shared_vocab.hash())
      throw ConfigError(where + ": vocabulary hash does not match the current encoders");
    if (loaded->tag_map.hash() != expect.encoders->tag_map.hash())
      throw ConfigError(where + ": tag-map hash does not match the current encoders");
  }
}

TrainInfo info_from_json(const json& manifest) {
  TrainInfo info;
  info.seed = manifest.at("seed").get<std::uint64_t>();
  const json& h = manifest.at("hyper");
  info.hyper = {h.at("batch_size").get<nn::Index>(), h.at("units").get<nn::Index>(), h.at("dropout").get<double>()};
  for (const json& l : manifest.at("logs"))
    info.logs.emplace_back(l.at("name").get<std::string>(), train_result_from_json(l.at("result")));
  return info;
}

}  // namespace

void save_models(const std::string& dir, const ModelSet& models, const std::string& dataset_fingerprint) {
  const enc::EncoderSet* shared = nullptr;
  for (const auto& [kind, m] : models)
    if (const enc::EncoderSet* e = encoders_of(*m); e != nullptr && kind != ModelKind::relative_representation) {
      shared = e;
      break;
    }
  try {
    for (const auto& [kind, m] : models) save_one(fs::path(dir) / std::string(slug(kind)), *m, dataset_fingerprint, shared);
  } catch (const fs::filesystem_error& e) {
    throw IoError(e.what());
  }
}

ModelSet load_models(const std::string& dir, const BundleExpectations& expect) {
  if (!fs::is_directory(dir)) throw IoError("bundle directory " + dir + " does not exist");
  std::map<ModelKind, json> manifests;
  for (ModelKind k : kAllModels) {
    const fs::path p = fs::path(dir) / std::string(slug(k)) / "manifest.json";
    if (!fs::exists(p)) continue;
    json m = read_json(p);
    if (m.value("format", "") != "mmrec-bundle" || m.value("version", 0) != kBundleVersion)
      throw DataError(p.string() + ": not a supported model bundle");
    if (m.at("kind").get<std::string>() != slug(k)) throw DataError(p.string() + ": kind does not match its directory");
    manifests.emplace(k, std::move(m));
  }
  ModelSet out;
  std::shared_ptr<const enc::EncoderSet> shared;
  const auto encoders_for = [&](const json& m, const std::string& where) -> std::shared_ptr<const enc::EncoderSet> {
    if (!m.contains("encoders")) return nullptr;
    auto e = std::make_shared<enc::EncoderSet>(encoders_from_json(m.at("encoders")));
    check_expectations(m, e.get(), expect, where);
    if (shared && (shared->session_vocab.hash() != e->session_vocab.hash() || shared->tag_map.hash() != e->tag_map.hash()))
      throw ConfigError(where + ": encoders differ from the other bundles");
    if (!shared) shared = e;
    return e;
  };
  const auto neural = [&](ModelKind k) -> std::shared_ptr<NeuralModel> {
    if (auto it = out.find(k); it != out.end()) return std::static_pointer_cast<NeuralModel>(it->second);
    if (!manifests.count(k)) throw DataError("bundle directory lacks the " + std::string(display_name(k)) + " model");
    const json& m = manifests.at(k);
    const fs::path d = fs::path(dir) / std::string(slug(k));
    std::shared_ptr<const enc::EncoderSet> e = encoders_for(m, d.string());
    if (!e) throw DataError(d.string() + ": missing encoder manifest");
    if (k == ModelKind::relative_representation) {
      auto withanchors = std::make_shared<enc::EncoderSet>(*e);
      auto am = std::make_shared<enc::AnchorModel>();
      am->nets.conversation = load_network(d, "anchor_conversation", m);
      am->nets.session = load_network(d, "anchor_session", m);
      const auto ts = nn::load_checkpoint((d / "anchors.ckpt").string());
      am->anchors.user_ids = m.at("encoders").at("anchor_ids").get<std::vector<std::string>>();
      am->anchors.conversation = tensor(ts, "anchors.conversation");
      am->anchors.session = tensor(ts, "anchors.session");
      if (am->anchors.conversation.rows() != am->anchors.size()) throw DataError(d.string() + ": anchor count mismatch");
      withanchors->anchors = am;
      e = withanchors;
    }
    auto model = std::make_shared<NeuralModel>(k, e, load_network(d, "model", m));
    model->info() = info_from_json(m);
    out[k] = model;
    return model;
  };

  for (const auto& [k, m] : manifests) {
    if (out.count(k)) continue;
    const fs::path d = fs::path(dir) / std::string(slug(k));
    check_expectations(m, nullptr, expect, d.string());
    std::shared_ptr<Recommender> model;
    switch (k) {
      case ModelKind::popular: {
        const auto ts = nn::load_checkpoint((d / "popular.ckpt").string());
        model = std::make_shared<PopularModel>(as_vector(tensor(ts, "popular.scores")));
        break;
      }
      case ModelKind::late_fusion:
        model = std::make_shared<LateFusionModel>(neural(ModelKind::conversation), neural(ModelKind::web_session));
        break;
      case ModelKind::knowledge_distillation:
        model = std::make_shared<DistillationModel>(encoders_for(m, d.string()), load_network(d, "student", m),
                                                    neural(ModelKind::conversation), neural(ModelKind::web_session));
        break;
      case ModelKind::neutral_imputation: {
        const auto ts = nn::load_checkpoint((d / "neutral.ckpt").string());
        model = std::make_shared<ImputationModel>(
            encoders_for(m, d.string()), load_network(d, "joint", m),
            ImputationModel::Neutral{as_vector(tensor(ts, "neutral.conversation")),
                                     as_vector(tensor(ts, "neutral.session"))});
        break;
      }
      case ModelKind::generative_imputation: {
        auto g = std::make_shared<ImputationModel::Generative>(ImputationModel::Generative{
            load_network(d, "imputer_conversation", m), load_network(d, "imputer_session", m)});
        model = std::make_shared<ImputationModel>(encoders_for(m, d.string()), load_network(d, "joint", m), g);
        break;
      }
      default: neural(k); continue;
    }
    model->info() = info_from_json(m);
    out[k] = model;
  }
  return out;
}

}  // namespace mmrec::models
