#include "mmrec/eval/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mmrec/error.hpp"

namespace mmrec::eval {

namespace {

constexpr int kMaxIterations = 500;
constexpr double kEps = 1e-16;
constexpr double kTiny = 1e-300;

double gamma_series(double a, double x) {
  double term = 1.0 / a, sum = term;
  for (int n = 1; n < kMaxIterations; ++n) {
    term *= x / (a + n);
    sum += term;
    if (std::abs(term) < std::abs(sum) * kEps) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Lentz continued fraction for Q(a, x).
double gamma_fraction(double a, double x) {
  double b = x + 1.0 - a, c = 1.0 / kTiny, d = 1.0 / b, h = d;
  for (int i = 1; i < kMaxIterations; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::abs(d) < kTiny) d = kTiny;
    c = b + an / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

double beta_fraction(double x, double a, double b) {
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m < kMaxIterations; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::abs(delta - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double regularized_gamma_p(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw ConfigError("incomplete gamma needs a > 0 and x >= 0");
  if (x == 0.0) return 0.0;
  if (std::isinf(x)) return 1.0;
  return x < a + 1.0 ? gamma_series(a, x) : 1.0 - gamma_fraction(a, x);
}

double regularized_gamma_q(double a, double x) {
  if (a <= 0.0 || x < 0.0) throw ConfigError("incomplete gamma needs a > 0 and x >= 0");
  if (x == 0.0) return 1.0;
  if (std::isinf(x)) return 0.0;
  return x < a + 1.0 ? 1.0 - gamma_series(a, x) : gamma_fraction(a, x);
}

double regularized_beta(double x, double a, double b) {
  if (a <= 0.0 || b <= 0.0 || x < 0.0 || x > 1.0) throw ConfigError("incomplete beta arguments out of range");
  if (x == 0.0 || x == 1.0) return x;
  const double front = std::exp(std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) +
                                b * std::log1p(-x));
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_fraction(x, a, b) / a;
  return 1.0 - front * beta_fraction(1.0 - x, b, a) / b;
}

double chi_square_sf(double x, double dof) {
  if (x <= 0.0) return 1.0;
  return regularized_gamma_q(dof / 2.0, x / 2.0);
}

double f_sf(double f, double d1, double d2) {
  if (f <= 0.0) return 1.0;
  if (std::isinf(f)) return 0.0;
  return regularized_beta(d2 / (d2 + d1 * f), d2 / 2.0, d1 / 2.0);
}

TestResult mcnemar_counts(std::uint64_t b, std::uint64_t c) {
  if (b + c == 0) return {0.0, 1.0};
  const double diff = std::abs(static_cast<double>(b) - static_cast<double>(c)) - 1.0;
  const double stat = diff > 0.0 ? diff * diff / static_cast<double>(b + c) : 0.0;
  return {stat, chi_square_sf(stat, 1.0)};
}

TestResult mcnemar(std::span<const std::uint8_t> hits_a, std::span<const std::uint8_t> hits_b) {
  if (hits_a.size() != hits_b.size()) throw ConfigError("mcnemar: outcome vectors differ in length");
  std::uint64_t b = 0, c = 0;
  for (std::size_t i = 0; i < hits_a.size(); ++i) {
    if (hits_a[i] && !hits_b[i]) ++b;
    if (!hits_a[i] && hits_b[i]) ++c;
  }
  return mcnemar_counts(b, c);
}

TestResult anova_oneway(const std::vector<std::vector<double>>& groups) {
  if (groups.size() < 2) throw ConfigError("anova needs at least two groups");
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& g : groups) {
    if (g.size() < 2) throw ConfigError("anova needs at least two values per group");
    total = std::accumulate(g.begin(), g.end(), total);
    n += g.size();
  }
  const auto constant = [](const std::vector<double>& g) {
    return std::all_of(g.begin(), g.end(), [&](double v) { return v == g.front(); });
  };
  const bool all_equal = std::all_of(groups.begin(), groups.end(), [&](const std::vector<double>& g) {
    return constant(g) && g.front() == groups.front().front();
  });
  const double grand = total / static_cast<double>(n);
  double between = 0.0, within = 0.0;
  for (const auto& g : groups) {
    if (constant(g)) {
      between += static_cast<double>(g.size()) * (g.front() - grand) * (g.front() - grand);
      continue;
    }
    const double mean = std::accumulate(g.begin(), g.end(), 0.0) / static_cast<double>(g.size());
    between += static_cast<double>(g.size()) * (mean - grand) * (mean - grand);
    for (double v : g) within += (v - mean) * (v - mean);
  }
  if (all_equal) between = 0.0;
  const double d1 = static_cast<double>(groups.size() - 1);
  const double d2 = static_cast<double>(n - groups.size());
  const double ms_between = between / d1, ms_within = within / d2;
  if (ms_within == 0.0) {
    if (ms_between == 0.0) return {0.0, 1.0};
    return {std::numeric_limits<double>::infinity(), 0.0};
  }
  const double f = ms_between / ms_within;
  return {f, f_sf(f, d1, d2)};
}

}  // namespace mmrec::eval
