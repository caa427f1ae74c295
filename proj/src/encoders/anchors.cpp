#include "mmrec/encoders/anchors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>

#include "mmrec/encoders/encoding.hpp"
#include "mmrec/error.hpp"
#include "mmrec/log.hpp"

namespace mmrec::enc {

using nn::Index;
using nn::Real;

nn::NetworkSpec anchor_network_spec(Index input_width, int item_count, const AnchorConfig& cfg) {
  nn::NetworkSpec spec;
  spec.input_width = input_width;
  spec.layers = {
      {nn::LayerKind::dense, input_width, cfg.latent_width, nn::Activation::tanh, cfg.dropout, true},
      {nn::LayerKind::dense, cfg.latent_width, item_count, nn::Activation::identity, 0.0, true},
  };
  return spec;
}

namespace {

EncodedSequence single_step(Modality m, std::vector<double> values) {
  EncodedSequence s;
  s.steps.push_back({m, std::move(values)});
  return s;
}

struct EventData {
  nn::LabeledData<Real> conversation;
  nn::LabeledData<Real> session;
};

EventData event_data(const std::vector<data::UserRecord>& users, const Vocabulary& vocab, int item_count) {
  EventData d;
  std::vector<std::vector<double>> conv_labels, sess_labels;
  for (const data::UserRecord& u : users) {
    const std::vector<double> label = u.purchase.label(item_count);
    for (const data::Event& e : u.events) {
      if (e.is_conversation()) {
        d.conversation.inputs.push_back(single_step(Modality::conversation, encode_conversation_avg(e.conversation())));
        conv_labels.push_back(label);
      } else {
        d.session.inputs.push_back(single_step(Modality::session, encode_session(e.session(), vocab)));
        sess_labels.push_back(label);
      }
    }
  }
  const auto fill = [item_count](nn::Matrix<Real>& m, const std::vector<std::vector<double>>& rows) {
    m.resize(static_cast<Index>(rows.size()), item_count);
    for (std::size_t i = 0; i < rows.size(); ++i)
      for (int j = 0; j < item_count; ++j) m(static_cast<Index>(i), j) = static_cast<Real>(rows[i][static_cast<std::size_t>(j)]);
  };
  fill(d.conversation.targets, conv_labels);
  fill(d.session.targets, sess_labels);
  return d;
}

nn::TrainResult fit_one(nn::Network<Real>& net, const nn::LabeledData<Real>& train, const nn::LabeledData<Real>& valid,
                        const nn::TrainConfig& cfg, const char* what) {
  if (train.size() == 0) throw TrainingError(std::string("no training ") + what + " for the anchor network");
  if (valid.size() == 0) {
    log_warning(std::string("no validation ") + what + "; anchor network validates on its training events");
    return nn::train(net, train, train, cfg);
  }
  return nn::train(net, train, valid, cfg);
}

Eigen::MatrixXd latents_of(nn::Network<Real>& net, const std::vector<EncodedSequence>& inputs, Index width) {
  if (inputs.empty()) return Eigen::MatrixXd(0, width);
  return net.hidden_representation(inputs).template cast<double>();
}

}  // namespace

AnchorNetworks fit_anchor_networks(const std::vector<data::UserRecord>& train,
                                   const std::vector<data::UserRecord>& valid, const Vocabulary& session_vocab,
                                   int embedding_dim, int item_count, const AnchorConfig& cfg) {
  if (embedding_dim < 1) throw ConfigError("anchor networks need conversation embeddings");
  if (session_vocab.size() < 1) throw ConfigError("anchor networks need a non-empty session vocabulary");
  const EventData tr = event_data(train, session_vocab, item_count);
  const EventData va = event_data(valid, session_vocab, item_count);
  AnchorNetworks nets{
      nn::Network<Real>(anchor_network_spec(embedding_dim, item_count, cfg), cfg.train.seed),
      nn::Network<Real>(anchor_network_spec(session_vocab.size(), item_count, cfg), cfg.train.seed + 1),
      {},
      {}};
  nets.conversation_log = fit_one(nets.conversation, tr.conversation, va.conversation, cfg.train, "conversations");
  nn::TrainConfig sess_cfg = cfg.train;
  sess_cfg.seed = cfg.train.seed + 1;
  nets.session_log = fit_one(nets.session, tr.session, va.session, sess_cfg, "web sessions");
  return nets;
}

Eigen::MatrixXd conversation_latents(AnchorNetworks& nets, std::span<const data::Conversation* const> events) {
  std::vector<EncodedSequence> inputs;
  inputs.reserve(events.size());
  for (const data::Conversation* c : events)
    inputs.push_back(single_step(Modality::conversation, encode_conversation_avg(*c)));
  return latents_of(nets.conversation, inputs, nets.conversation.spec().layers.front().output_width);
}

Eigen::MatrixXd session_latents(AnchorNetworks& nets, std::span<const data::WebSession* const> events,
                                const Vocabulary& session_vocab) {
  std::vector<EncodedSequence> inputs;
  inputs.reserve(events.size());
  for (const data::WebSession* s : events)
    inputs.push_back(single_step(Modality::session, encode_session(*s, session_vocab)));
  return latents_of(nets.session, inputs, nets.session.spec().layers.front().output_width);
}

namespace {

const data::Conversation* last_conversation(const data::UserRecord& u) {
  for (auto it = u.events.rbegin(); it != u.events.rend(); ++it)
    if (it->is_conversation()) return &it->conversation();
  return nullptr;
}

const data::WebSession* last_session(const data::UserRecord& u) {
  for (auto it = u.events.rbegin(); it != u.events.rend(); ++it)
    if (!it->is_conversation()) return &it->session();
  return nullptr;
}

struct Candidates {
  std::vector<const data::UserRecord*> users;
  Eigen::MatrixXd conversation;
  Eigen::MatrixXd session;
};

Candidates candidate_latents(std::vector<const data::UserRecord*> users, AnchorNetworks& nets,
                             const Vocabulary& session_vocab) {
  Candidates c;
  std::vector<const data::Conversation*> convs;
  std::vector<const data::WebSession*> sessions;
  for (const data::UserRecord* u : users) {
    convs.push_back(last_conversation(*u));
    sessions.push_back(last_session(*u));
  }
  c.users = std::move(users);
  c.conversation = conversation_latents(nets, convs);
  c.session = session_latents(nets, sessions, session_vocab);
  return c;
}

void append_anchor(AnchorSet& set, const Candidates& c, std::size_t i) {
  const Index n = set.size();
  set.user_ids.push_back(c.users[i]->id);
  set.conversation.conservativeResize(n + 1, c.conversation.cols());
  set.session.conservativeResize(n + 1, c.session.cols());
  set.conversation.row(n) = c.conversation.row(static_cast<Index>(i));
  set.session.row(n) = c.session.row(static_cast<Index>(i));
}

}  // namespace

AnchorSet select_anchors(const std::vector<data::UserRecord>& train, AnchorNetworks& nets,
                         const Vocabulary& session_vocab, int item_count, int count, std::uint64_t seed) {
  if (count < 1) throw ConfigError("anchor count must be positive");
  std::vector<const data::UserRecord*> pool;
  for (const data::UserRecord& u : train)
    if (u.conversation_count() > 0 && u.session_count() > 0) pool.push_back(&u);
  if (pool.empty()) throw DataError("no intersection users in the training split to draw anchors from");

  std::mt19937_64 rng(seed);
  std::shuffle(pool.begin(), pool.end(), rng);
  const Candidates cand = candidate_latents(std::move(pool), nets, session_vocab);

  std::vector<int> items(static_cast<std::size_t>(item_count));
  std::iota(items.begin(), items.end(), 0);
  const std::vector<int> freq = data::purchase_counts(train, item_count);
  std::stable_sort(items.begin(), items.end(),
                   [&](int a, int b) { return freq[static_cast<std::size_t>(a)] > freq[static_cast<std::size_t>(b)]; });

  std::vector<std::vector<std::size_t>> by_item(static_cast<std::size_t>(item_count));
  for (std::size_t i = 0; i < cand.users.size(); ++i) {
    if (cand.conversation.row(static_cast<Index>(i)).norm() == 0.0 ||
        cand.session.row(static_cast<Index>(i)).norm() == 0.0)
      continue;
    for (data::ItemId j : cand.users[i]->purchase.items) by_item[static_cast<std::size_t>(j)].push_back(i);
  }

  AnchorSet set;
  set.conversation.resize(0, cand.conversation.cols());
  set.session.resize(0, cand.session.cols());
  std::vector<bool> used(cand.users.size(), false);
  std::vector<std::size_t> cursor(static_cast<std::size_t>(item_count), 0);
  bool progress = true;
  while (set.size() < count && progress) {
    progress = false;
    for (int j : items) {
      if (set.size() >= count) break;
      auto& list = by_item[static_cast<std::size_t>(j)];
      auto& pos = cursor[static_cast<std::size_t>(j)];
      while (pos < list.size() && used[list[pos]]) ++pos;
      if (pos == list.size()) continue;
      used[list[pos]] = true;
      append_anchor(set, cand, list[pos]);
      progress = true;
    }
  }
  if (set.size() < count)
    log_warning("only " + std::to_string(set.size()) + " of " + std::to_string(count) + " anchors available");
  if (set.size() == 0) throw DataError("no usable anchor users");
  return set;
}

AnchorSet anchors_from_ids(const std::vector<data::UserRecord>& train, AnchorNetworks& nets,
                           const Vocabulary& session_vocab, const std::vector<std::string>& ids) {
  std::map<std::string, const data::UserRecord*> by_id;
  for (const data::UserRecord& u : train) by_id.emplace(u.id, &u);
  std::vector<const data::UserRecord*> users;
  for (const std::string& id : ids) {
    const auto it = by_id.find(id);
    if (it == by_id.end()) throw DataError("anchor user '" + id + "' is not in the training split");
    if (it->second->conversation_count() == 0 || it->second->session_count() == 0)
      throw DataError("anchor user '" + id + "' lacks a modality");
    users.push_back(it->second);
  }
  const Candidates cand = candidate_latents(std::move(users), nets, session_vocab);
  AnchorSet set;
  set.user_ids = ids;
  set.conversation = cand.conversation;
  set.session = cand.session;
  return set;
}

double cosine_similarity(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw DataError("cosine of vectors with different widths");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    dot += a[k] * b[k];
    na += a[k] * a[k];
    nb += b[k] * b[k];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

std::vector<double> relative_representation(std::span<const double> latent, const Eigen::MatrixXd& anchors) {
  std::vector<double> r(static_cast<std::size_t>(anchors.rows()), 0.0);
  if (static_cast<Index>(latent.size()) != anchors.cols())
    throw DataError("latent width " + std::to_string(latent.size()) + " does not match anchor width " +
                    std::to_string(anchors.cols()));
  bool zero = true;
  for (double x : latent) zero = zero && x == 0.0;
  if (zero) {
    log_warning("zero-norm latent vector; relative representation set to zero");
    return r;
  }
  std::vector<double> row(static_cast<std::size_t>(anchors.cols()));
  for (Index i = 0; i < anchors.rows(); ++i) {
    for (Index k = 0; k < anchors.cols(); ++k) row[static_cast<std::size_t>(k)] = anchors(i, k);
    r[static_cast<std::size_t>(i)] = cosine_similarity(latent, row);
  }
  return r;
}

}  // namespace mmrec::enc
