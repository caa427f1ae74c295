#include "mmrec/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "mmrec/error.hpp"

namespace mmrec::nn {

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

namespace {

double loss_at(Network<double>& net, const SequenceBatch<double>& batch, const LossTargets<double>& targets) {
  return batch_loss(net.spec().loss, net.forward(batch, nullptr), targets);
}

void track(GradCheckReport& report, double err, const std::string& name, Index index) {
  ++report.checked;
  if (err > report.max_relative_error || report.worst_index < 0) {
    report.max_relative_error = err;
    report.worst_parameter = name;
    report.worst_index = index;
  }
}

}  // namespace

GradientSet analytic_gradients(Network<double>& net, const SequenceBatch<double>& batch,
                               const LossTargets<double>& targets) {
  net.zero_grad();
  const Matrix<double> out = net.forward(batch, nullptr);
  net.backward(batch_loss_grad(net.spec().loss, out, targets));
  GradientSet g;
  for (const Parameter<double>* p : std::as_const(net).parameters()) {
    g.names.push_back(p->name);
    g.values.push_back(p->grad);
  }
  return g;
}

GradientSet numeric_gradients(Network<double>& net, const SequenceBatch<double>& batch,
                              const LossTargets<double>& targets, double h) {
  GradientSet g;
  for (Parameter<double>* p : net.parameters()) {
    Matrix<double> grad(p->value.rows(), p->value.cols());
    for (Index i = 0; i < p->value.size(); ++i) {
      double& w = p->value.data()[i];
      const double saved = w;
      w = saved + h;
      const double plus = loss_at(net, batch, targets);
      w = saved - h;
      const double minus = loss_at(net, batch, targets);
      w = saved;
      grad.data()[i] = (plus - minus) / (2.0 * h);
    }
    g.names.push_back(p->name);
    g.values.push_back(std::move(grad));
  }
  return g;
}

double loss_scaled_floor(double loss) { return 1e-6 * std::max(1.0, std::abs(loss)); }

GradCheckReport compare_gradients(const GradientSet& analytic, const GradientSet& numeric, double tolerance,
                                  double floor) {
  if (analytic.values.size() != numeric.values.size()) throw UsageError("gradient sets differ in size");
  GradCheckReport report;
  for (std::size_t k = 0; k < analytic.values.size(); ++k) {
    const Matrix<double>& a = analytic.values[k];
    const Matrix<double>& n = numeric.values[k];
    if (a.size() != n.size()) throw UsageError("gradient shapes differ for " + analytic.names[k]);
    for (Index i = 0; i < a.size(); ++i)
      track(report, relative_error(a.data()[i], n.data()[i], floor), analytic.names[k], i);
  }
  report.passed = report.max_relative_error < tolerance;
  return report;
}

GradCheckReport grad_check(Network<double>& net, const SequenceBatch<double>& batch,
                           const LossTargets<double>& targets, double tolerance, double h) {
  const GradientSet a = analytic_gradients(net, batch, targets);
  const GradientSet n = numeric_gradients(net, batch, targets, h);
  return compare_gradients(a, n, tolerance, loss_scaled_floor(loss_at(net, batch, targets)));
}

GradCheckReport input_grad_check(Network<double>& net, SequenceBatch<double> batch,
                                 const LossTargets<double>& targets, double tolerance, double h) {
  net.zero_grad();
  const Matrix<double> out = net.forward(batch, nullptr);
  const double floor = loss_scaled_floor(batch_loss(net.spec().loss, out, targets));
  net.backward(batch_loss_grad(net.spec().loss, out, targets), true);
  const std::vector<SequenceStep<double>> grads = net.input_gradients();
  GradCheckReport report;
  for (std::size_t t = 0; t < batch.steps.size(); ++t) {
    for (int which = 0; which < 2; ++which) {
      StepBlock<double>& block = which == 0 ? batch.steps[t].conversation : batch.steps[t].session;
      const StepBlock<double>& g = which == 0 ? grads[t].conversation : grads[t].session;
      for (Index i = 0; i < block.values.size(); ++i) {
        double& x = block.values.data()[i];
        const double saved = x;
        x = saved + h;
        const double plus = loss_at(net, batch, targets);
        x = saved - h;
        const double minus = loss_at(net, batch, targets);
        x = saved;
        const double numeric = (plus - minus) / (2.0 * h);
        track(report, relative_error(g.values.data()[i], numeric, floor),
              "input[" + std::to_string(t) + (which == 0 ? "].conversation" : "].session"), i);
      }
    }
  }
  report.passed = report.max_relative_error < tolerance;
  return report;
}

}  // namespace mmrec::nn
