#pragma once

#include <optional>
#include <span>
#include <vector>

#include "bvm/dirichlet.hpp"
#include "bvm/model.hpp"

namespace bvm {

/// g_alpha(u) = u^alpha for alpha != 1 and u log u for alpha == 1, g(0) = 0.
double g_alpha(double u, double alpha);
double g_alpha_prime(double u, double alpha);
double g_alpha_second(double u, double alpha);

/// sum_{i=1}^k g_alpha(theta(i)); the tail cell is excluded.
double functional_truncated(std::span<const double> theta, double alpha);
double functional_truncated(const TruncatedPmf& theta, double alpha);
/// sum_{i >= 1} g_alpha(theta(i)); closed forms for the envelope families.
double functional_full(const CountablePmf& pmf, double alpha);
/// sum_{i > k} g_alpha(theta(i)), the truncation bias of the plug-in target.
double functional_tail(const CountablePmf& pmf, double alpha, std::int64_t k);

/// sum_{i > k} theta(i) g_alpha(theta(i)).
double weighted_functional_tail(const CountablePmf& pmf, double alpha, std::int64_t k);

double shannon_entropy(const TruncatedPmf& theta);
double shannon_entropy(const CountablePmf& pmf);
double renyi_entropy(const TruncatedPmf& theta, double alpha);
double renyi_entropy(const CountablePmf& pmf, double alpha);

/// gamma^2 = sum theta g'(theta)^2 - (sum theta g'(theta))^2 over cells 1..k.
/// Requires alpha > 1/2 and theta(i) > 0 for 1 <= i <= k.
double gamma_variance(const TruncatedPmf& theta0, double alpha);

/// The untruncated variance sum_{i >= 1} over the whole support.
double gamma_variance_full(const CountablePmf& pmf, double alpha);

struct PluginVariance {
  double value = 0.0;
  /// Number of empty cells among 1..k that were skipped.
  std::size_t skipped_cells = 0;
};
/// gamma^2 at an MLE; empty cells contribute their zero limit.
PluginVariance gamma_variance_plugin(const TruncatedPmf& theta_hat, double alpha);

double plug_in_estimate(const CountVector& counts, double alpha);
std::vector<double> posterior_functional_draws(const PosteriorDrawSet& draws, double alpha);

enum class IntervalMethod { credible, wald };

struct IntervalEstimate {
  double lower = 0.0;
  double upper = 0.0;
  /// Nominal coverage 1 - delta.
  double level = 0.0;
  IntervalMethod method = IntervalMethod::credible;
  /// Set for a zero-width Wald interval or when empty cells were skipped.
  bool warning = false;

  double width() const noexcept { return upper - lower; }
  bool contains(double x) const noexcept { return lower <= x && x <= upper; }
};

/// Narrowest window of ceil((1 - delta) m) order statistics, leftmost on ties.
IntervalEstimate credible_interval(std::span<const double> values, double delta);

/// G_hat -/+ u_delta gamma_hat / sqrt(n). gamma_hat is taken at the MLE unless
/// theta0 is supplied.
IntervalEstimate wald_interval(const CountVector& counts, double alpha, double delta,
                               const std::optional<TruncatedPmf>& theta0 = std::nullopt);

}  // namespace bvm
