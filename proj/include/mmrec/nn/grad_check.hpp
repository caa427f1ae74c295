#pragma once

#include <string>
#include <vector>

#include "mmrec/nn/network.hpp"

namespace mmrec::nn {

/// Gradients of every parameter, in Network::parameters() order.
struct GradientSet {
  std::vector<std::string> names;
  std::vector<Matrix<double>> values;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  Index worst_index = -1;
  std::size_t checked = 0;
  bool passed = false;
};

/// Relative error |a - n| / max(|a|, |n|, floor). The floor keeps entries
/// whose true gradient is ~0 from dominating through round-off.
double relative_error(double analytic, double numeric, double floor = 1e-6);

/// Analytic gradients from one deterministic forward/backward pass.
GradientSet analytic_gradients(Network<double>& net, const SequenceBatch<double>& batch,
                               const LossTargets<double>& targets);

/// Central finite differences with step `h` on every parameter entry.
GradientSet numeric_gradients(Network<double>& net, const SequenceBatch<double>& batch,
                              const LossTargets<double>& targets, double h = 1e-5);

/// Floor of 1e-6 scaled by max(1, |loss|); the round-off in a central
/// difference grows with the magnitude of the loss.
double loss_scaled_floor(double loss);

GradCheckReport compare_gradients(const GradientSet& analytic, const GradientSet& numeric, double tolerance,
                                  double floor = 1e-6);

/// Full check: analytic vs numeric on all parameters, using the loss-scaled
/// floor. Dropout is not used.
GradCheckReport grad_check(Network<double>& net, const SequenceBatch<double>& batch,
                           const LossTargets<double>& targets, double tolerance = 1e-4, double h = 1e-5);

/// Checks d loss / d inputs for every step block against finite differences.
GradCheckReport input_grad_check(Network<double>& net, SequenceBatch<double> batch,
                                 const LossTargets<double>& targets, double tolerance = 1e-4, double h = 1e-5);

}  // namespace mmrec::nn
