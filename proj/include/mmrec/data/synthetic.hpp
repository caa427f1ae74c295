#pragma once

#include <cstdint>

#include "mmrec/data/types.hpp"

namespace mmrec::data {

struct GeneratorConfig {
  int users = 10000;
  std::uint64_t seed = 1;
  int embedding_dim = 32;

  double share_conversations_only = 0.13;
  double share_sessions_only = 0.68;
  double share_both = 0.19;

  double conversation_count_mean = 1.38;
  double conversation_count_std = 0.82;
  double session_count_mean = 2.3;
  double session_count_std = 1.98;
  int max_events_per_modality = 10;

  // topic of an event: the purchase intent with these probabilities, else a
  // distractor (same product line with p_related_distractor, else by popularity)
  double p_recent_on_intent = 0.85;
  double p_earlier_on_intent = 0.35;
  double p_related_distractor = 0.5;
  double p_second_item = 0.2;
  double p_own_base = 0.45;

  int min_actions = 4;
  int max_actions = 14;
  int min_sentences = 4;
  int max_sentences = 18;
  double embedding_noise = 0.3;  // per-dimension standard deviation

  Timestamp window_start = 1651363200;  // 2022-05-01
  Timestamp window_end = 1682899200;    // 2023-05-01
  Timestamp max_gap = 10 * kSecondsPerDay;

  void validate() const;
};

/// The default 24-item insurance catalog: 8 base products, 16 coverages.
ItemCatalog default_catalog();

/// Deterministic given the config (including its seed).
Dataset generate_synthetic(const GeneratorConfig& cfg);

}  // namespace mmrec::data
