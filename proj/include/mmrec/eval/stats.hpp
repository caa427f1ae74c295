#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace mmrec::eval {

struct TestResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Regularized lower incomplete gamma P(a, x) and its complement Q(a, x).
double regularized_gamma_p(double a, double x);
double regularized_gamma_q(double a, double x);

/// Regularized incomplete beta I_x(a, b).
double regularized_beta(double x, double a, double b);

/// Upper tail of the chi-square distribution with `dof` degrees of freedom.
double chi_square_sf(double x, double dof);

/// Upper tail of the F distribution.
double f_sf(double f, double d1, double d2);

/// Continuity-corrected McNemar test on discordant counts b (A hit, B miss)
/// and c (A miss, B hit). p = 1 when b + c = 0.
TestResult mcnemar_counts(std::uint64_t b, std::uint64_t c);

/// Paired binary outcomes; sizes must match.
TestResult mcnemar(std::span<const std::uint8_t> hits_a, std::span<const std::uint8_t> hits_b);

/// One-way ANOVA. Needs at least 2 groups of at least 2 values.
/// F = 0 when both mean squares are zero, +inf when only the within term is.
TestResult anova_oneway(const std::vector<std::vector<double>>& groups);

}  // namespace mmrec::eval
