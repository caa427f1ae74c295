#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "mmrec/nn/network.hpp"

namespace mmrec::nn {

inline constexpr int kCheckpointVersion = 1;

/// One named parameter as stored on disk.
struct NamedTensor {
  std::string name;
  Matrix<double> values;
};

/// Text format:
///   mmrec-checkpoint 1
///   tensors <count>
///   tensor <name> <rows> <cols>
///   <row-major values, one matrix row per line, shortest round-trip form>
/// Values written from float parameters reload bit-identically.
void write_checkpoint(std::ostream& os, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(std::istream& is);

template <typename T>
std::vector<NamedTensor> export_parameters(const Network<T>& net);

/// Copies tensors into the network; names and shapes must match exactly.
template <typename T>
void import_parameters(Network<T>& net, const std::vector<NamedTensor>& tensors);

void save_checkpoint(const std::string& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> load_checkpoint(const std::string& path);

}  // namespace mmrec::nn
