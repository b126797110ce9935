#pragma once

#include <span>
#include <vector>

namespace bvm {

double normal_cdf(double x) noexcept;
/// Inverse standard normal CDF, accurate to ~1e-15 on (0, 1).
double normal_quantile(double p);

/// Regularized lower incomplete gamma P(a, x): series for x < a + 1,
/// continued fraction (modified Lentz) otherwise.
double regularized_gamma_p(double a, double x);
/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x), computed
/// without cancellation in the upper tail.
double regularized_gamma_q(double a, double x);
/// P(chi^2_dof >= x).
double chi_square_sf(double dof, double x);

/// sup_x |F_emp(x) - Phi(x)| for the empirical distribution of `values`.
double kolmogorov_distance_normal(std::span<const double> values);

/// Two-sample Kolmogorov-Smirnov statistic sup_x |F_a(x) - F_b(x)|.
double two_sample_ks(std::span<const double> a, std::span<const double> b);
/// Asymptotic two-sample critical value c(level) * sqrt((n+m)/(n m)) with
/// c(level) = sqrt(-log(level/2)/2).
double two_sample_ks_critical(std::size_t n, std::size_t m, double level);

/// Half the L1 distance between two discrete distributions on the same atoms.
double total_variation(std::span<const double> p, std::span<const double> q);

}  // namespace bvm
