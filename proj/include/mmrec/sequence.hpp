#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace mmrec {

enum class Modality : std::uint8_t { conversation, session };

std::string_view to_string(Modality m) noexcept;

/// One encoded event: a feature vector tagged with the modality it came from.
struct EncodedStep {
  Modality modality = Modality::session;
  std::vector<double> values;
};

/// A user's events encoded into fixed-width vectors, oldest first.
struct EncodedSequence {
  std::vector<EncodedStep> steps;

  bool empty() const noexcept { return steps.empty(); }
  std::size_t size() const noexcept { return steps.size(); }
};

}  // namespace mmrec
