#include "bvm/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "bvm/errors.hpp"
#include "bvm/special.hpp"

namespace bvm {
namespace {

void require_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw ParameterError("alpha must be positive");
}

void require_variance_alpha(double alpha) {
  require_alpha(alpha);
  if (!(alpha > 0.5)) throw ParameterError("variance requires alpha > 1/2");
}

double require_positive(double u) {
  if (!(u > 0.0)) throw DomainError("derivatives of g_alpha need u > 0");
  return u;
}

// sum_{i >= m} log(i)^p i^(-eta) for p in {1, 2}: direct terms then
// Euler-Maclaurin.
double log_power_tail_sum(double eta, std::int64_t m, int p = 1) {
  constexpr std::int64_t kDirect = 2000;
  double direct = 0.0;
  for (std::int64_t i = m + kDirect - 1; i >= m; --i) {
    const double x = static_cast<double>(i);
    direct += std::pow(std::log(x), p) * std::pow(x, -eta);
  }
  const double x = static_cast<double>(m + kDirect);
  const double lx = std::log(x);
  const double f = std::pow(x, -eta);
  const double e1 = eta - 1.0;
  double integral, derivative;
  if (p == 1) {
    integral = x * f * (lx / e1 + 1.0 / (e1 * e1));
    derivative = f / x * (1.0 - eta * lx);
  } else {
    integral = x * f * (lx * lx / e1 + 2.0 * lx / (e1 * e1) + 2.0 / (e1 * e1 * e1));
    derivative = f / x * (2.0 * lx - eta * lx * lx);
  }
  return direct + integral + 0.5 * std::pow(lx, p) * f - derivative / 12.0;
}

// sum_{i > k} term(log theta(i)) for the geometric law, summed until the
// terms are negligible.
template <class Term>
double geometric_tail_sum(const CountablePmf& pmf, std::int64_t k, Term term) {
  double sum = 0.0;
  for (std::int64_t i = k + 1;; ++i) {
    const double lp = pmf.log_prob(i);
    const double t = term(lp);
    sum += t;
    if (lp < -745.0 || (std::fabs(t) <= 1e-18 * std::fabs(sum) && i > k + 8)) break;
  }
  return sum;
}

}  // namespace

double g_alpha(double u, double alpha) {
  require_alpha(alpha);
  if (u < 0.0) throw DomainError("g_alpha: u must be non-negative");
  if (u == 0.0) return 0.0;
  if (alpha == 1.0) return u * std::log(u);
  return std::pow(u, alpha);
}

double g_alpha_prime(double u, double alpha) {
  require_alpha(alpha);
  require_positive(u);
  if (alpha == 1.0) return std::log(u) + 1.0;
  return alpha * std::pow(u, alpha - 1.0);
}

double g_alpha_second(double u, double alpha) {
  require_alpha(alpha);
  require_positive(u);
  if (alpha == 1.0) return 1.0 / u;
  return alpha * (alpha - 1.0) * std::pow(u, alpha - 2.0);
}

double functional_truncated(std::span<const double> theta, double alpha) {
  require_alpha(alpha);
  double sum = 0.0;
  for (std::size_t i = 1; i < theta.size(); ++i) sum += g_alpha(theta[i], alpha);
  return sum;
}

double functional_truncated(const TruncatedPmf& theta, double alpha) {
  return functional_truncated(theta.probs(), alpha);
}

double functional_full(const CountablePmf& pmf, double alpha) {
  require_alpha(alpha);
  const double eta = pmf.eta();
  switch (pmf.family()) {
    case PmfFamily::explicit_vector: {
      double sum = 0.0;
      for (double p : pmf.explicit_probs()) sum += g_alpha(p, alpha);
      return sum;
    }
    case PmfFamily::exponential_envelope: {
      const double one_minus_q = -std::expm1(-eta);
      const double q = std::exp(-eta);
      if (alpha == 1.0) return std::log(one_minus_q) - eta * q / one_minus_q;
      return std::pow(one_minus_q, alpha) / (-std::expm1(-eta * alpha));
    }
    case PmfFamily::polynomial_envelope: {
      const double log_zeta = std::log(power_tail_sum(eta, 1));
      if (alpha == 1.0)
        return -log_zeta - eta * log_power_tail_sum(eta, 1) / std::exp(log_zeta);
      if (!(eta * alpha > 1.0))
        throw DomainError("functional_full: series diverges for eta * alpha <= 1");
      return std::exp(std::log(power_tail_sum(eta * alpha, 1)) - alpha * log_zeta);
    }
  }
  return 0.0;
}

double functional_tail(const CountablePmf& pmf, double alpha, std::int64_t k) {
  require_alpha(alpha);
  if (k < 0) throw ParameterError("functional_tail: k must be non-negative");
  const double eta = pmf.eta();
  switch (pmf.family()) {
    case PmfFamily::explicit_vector: {
      double sum = 0.0;
      const auto& p = pmf.explicit_probs();
      for (std::size_t i = static_cast<std::size_t>(std::min<std::int64_t>(
               k, static_cast<std::int64_t>(p.size())));
           i < p.size(); ++i)
        sum += g_alpha(p[i], alpha);
      return sum;
    }
    case PmfFamily::exponential_envelope: {
      // The tail past k is the full geometric sum scaled by q^k, shifted in log.
      const double qk = std::exp(-eta * static_cast<double>(k));
      if (alpha == 1.0) {
        const double full = functional_full(pmf, 1.0);
        return qk * (full - eta * static_cast<double>(k));
      }
      return std::pow(qk, alpha) * functional_full(pmf, alpha);
    }
    case PmfFamily::polynomial_envelope: {
      const double log_zeta = std::log(power_tail_sum(eta, 1));
      const double zeta = std::exp(log_zeta);
      if (alpha == 1.0)
        return -(log_zeta * power_tail_sum(eta, k + 1) + eta * log_power_tail_sum(eta, k + 1)) /
               zeta;
      if (!(eta * alpha > 1.0))
        throw DomainError("functional_tail: series diverges for eta * alpha <= 1");
      return power_tail_sum(eta * alpha, k + 1) / std::pow(zeta, alpha);
    }
  }
  return 0.0;
}

double weighted_functional_tail(const CountablePmf& pmf, double alpha, std::int64_t k) {
  require_alpha(alpha);
  if (k < 0) throw ParameterError("weighted_functional_tail: k must be non-negative");
  const double eta = pmf.eta();
  switch (pmf.family()) {
    case PmfFamily::explicit_vector: {
      double sum = 0.0;
      const auto& p = pmf.explicit_probs();
      for (std::size_t i = static_cast<std::size_t>(k); i < p.size(); ++i)
        sum += p[i] * g_alpha(p[i], alpha);
      return sum;
    }
    case PmfFamily::exponential_envelope:
      return geometric_tail_sum(pmf, k, [alpha](double lp) {
        const double t = std::exp(lp);
        return alpha == 1.0 ? t * t * lp : std::exp((alpha + 1.0) * lp);
      });
    case PmfFamily::polynomial_envelope: {
      const double log_zeta = std::log(power_tail_sum(eta, 1));
      const double zeta = std::exp(log_zeta);
      if (alpha == 1.0)
        return -(log_zeta * power_tail_sum(2.0 * eta, k + 1) +
                 eta * log_power_tail_sum(2.0 * eta, k + 1)) /
               (zeta * zeta);
      return power_tail_sum(eta * (alpha + 1.0), k + 1) / std::pow(zeta, alpha + 1.0);
    }
  }
  return 0.0;
}

double shannon_entropy(const TruncatedPmf& theta) { return -functional_truncated(theta, 1.0); }
double shannon_entropy(const CountablePmf& pmf) { return -functional_full(pmf, 1.0); }

double renyi_entropy(const TruncatedPmf& theta, double alpha) {
  if (alpha == 1.0) throw ParameterError("renyi_entropy: alpha must differ from 1");
  return -std::log(functional_truncated(theta, alpha)) / (alpha - 1.0);
}

double renyi_entropy(const CountablePmf& pmf, double alpha) {
  if (alpha == 1.0) throw ParameterError("renyi_entropy: alpha must differ from 1");
  return -std::log(functional_full(pmf, alpha)) / (alpha - 1.0);
}

double gamma_variance(const TruncatedPmf& theta0, double alpha) {
  require_variance_alpha(alpha);
  double first = 0.0, second = 0.0;
  for (std::size_t i = 1; i < theta0.cells(); ++i) {
    const double t = theta0[i];
    if (!(t > 0.0))
      throw DomainError("gamma_variance: theta0(" + std::to_string(i) + ") is zero");
    const double d = g_alpha_prime(t, alpha);
    first += t * d;
    second += t * d * d;
  }
  return std::max(0.0, second - first * first);
}

double gamma_variance_full(const CountablePmf& pmf, double alpha) {
  require_variance_alpha(alpha);
  const double eta = pmf.eta();
  double first = 0.0, second = 0.0;
  switch (pmf.family()) {
    case PmfFamily::explicit_vector:
      for (double t : pmf.explicit_probs()) {
        const double d = g_alpha_prime(t, alpha);
        first += t * d;
        second += t * d * d;
      }
      break;
    case PmfFamily::exponential_envelope: {
      const auto d = [alpha](double lp) {
        return alpha == 1.0 ? lp + 1.0 : alpha * std::exp((alpha - 1.0) * lp);
      };
      first = geometric_tail_sum(pmf, 0, [&](double lp) { return std::exp(lp) * d(lp); });
      second = geometric_tail_sum(pmf, 0, [&](double lp) {
        const double v = d(lp);
        return std::exp(lp) * v * v;
      });
      break;
    }
    case PmfFamily::polynomial_envelope: {
      const double log_zeta = std::log(power_tail_sum(eta, 1));
      if (alpha == 1.0) {
        // log theta + 1 = c - eta log i with c = 1 - log zeta.
        const double c = 1.0 - log_zeta;
        const double s0 = power_tail_sum(eta, 1);
        const double s1 = log_power_tail_sum(eta, 1, 1);
        const double s2 = log_power_tail_sum(eta, 1, 2);
        const double zeta = std::exp(log_zeta);
        first = (c * s0 - eta * s1) / zeta;
        second = (c * c * s0 - 2.0 * c * eta * s1 + eta * eta * s2) / zeta;
      } else {
        if (!(eta * (2.0 * alpha - 1.0) > 1.0))
          throw DomainError("gamma_variance_full: series diverges");
        first = alpha * std::exp(std::log(power_tail_sum(eta * alpha, 1)) - alpha * log_zeta);
        second = alpha * alpha *
                 std::exp(std::log(power_tail_sum(eta * (2.0 * alpha - 1.0), 1)) -
                          (2.0 * alpha - 1.0) * log_zeta);
      }
      break;
    }
  }
  return std::max(0.0, second - first * first);
}

PluginVariance gamma_variance_plugin(const TruncatedPmf& theta_hat, double alpha) {
  require_variance_alpha(alpha);
  PluginVariance out;
  double first = 0.0, second = 0.0;
  for (std::size_t i = 1; i < theta_hat.cells(); ++i) {
    const double t = theta_hat[i];
    if (t == 0.0) {
      ++out.skipped_cells;
      continue;
    }
    const double d = g_alpha_prime(t, alpha);
    first += t * d;
    second += t * d * d;
  }
  out.value = std::max(0.0, second - first * first);
  return out;
}

double plug_in_estimate(const CountVector& counts, double alpha) {
  return functional_truncated(mle(counts), alpha);
}

std::vector<double> posterior_functional_draws(const PosteriorDrawSet& draws, double alpha) {
  std::vector<double> out(draws.m);
  for (std::size_t i = 0; i < draws.m; ++i) out[i] = functional_truncated(draws.row(i), alpha);
  return out;
}

IntervalEstimate credible_interval(std::span<const double> values, double delta) {
  if (values.empty()) throw InputError("credible_interval: empty input");
  if (!(delta >= 0.0 && delta < 1.0))
    throw ParameterError("credible_interval: delta must lie in [0, 1)");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const std::size_t m = sorted.size();
  const double target = (1.0 - delta) * static_cast<double>(m);
  auto c = static_cast<std::size_t>(std::ceil(target - 1e-9 * std::max(1.0, target)));
  c = std::clamp<std::size_t>(c, 1, m);
  std::size_t best = 0;
  double best_width = sorted[c - 1] - sorted[0];
  for (std::size_t i = 1; i + c <= m; ++i) {
    const double w = sorted[i + c - 1] - sorted[i];
    if (w < best_width) {
      best_width = w;
      best = i;
    }
  }
  IntervalEstimate out;
  out.lower = sorted[best];
  out.upper = sorted[best + c - 1];
  out.level = 1.0 - delta;
  out.method = IntervalMethod::credible;
  return out;
}

IntervalEstimate wald_interval(const CountVector& counts, double alpha, double delta,
                               const std::optional<TruncatedPmf>& theta0) {
  if (!(delta >= 0.0 && delta < 1.0))
    throw ParameterError("wald_interval: delta must lie in [0, 1)");
  const TruncatedPmf theta_hat = mle(counts);
  const double g_hat = functional_truncated(theta_hat, alpha);
  IntervalEstimate out;
  out.level = 1.0 - delta;
  out.method = IntervalMethod::wald;
  double variance;
  if (theta0) {
    if (theta0->k() != counts.k()) throw ParameterError("wald_interval: truncation levels differ");
    variance = gamma_variance(*theta0, alpha);
  } else {
    const PluginVariance v = gamma_variance_plugin(theta_hat, alpha);
    variance = v.value;
    out.warning = v.skipped_cells > 0;
  }
  // delta = 0 gives the whole line unless the variance vanishes.
  const double half = variance == 0.0 ? 0.0
                                       : normal_quantile(1.0 - 0.5 * delta) * std::sqrt(variance) /
                                             std::sqrt(static_cast<double>(counts.n()));
  if (half == 0.0) out.warning = true;
  out.lower = g_hat - half;
  out.upper = g_hat + half;
  return out;
}

}  // namespace bvm
