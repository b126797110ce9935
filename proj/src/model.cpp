#include "bvm/model.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "bvm/errors.hpp"

namespace bvm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr std::int64_t kDirectTerms = 64;

double compensated_sum(std::span<const double> v) noexcept {
  double sum = 0.0, carry = 0.0;
  for (double x : v) {
    const double y = x - carry;
    const double t = sum + y;
    carry = (t - sum) - y;
    sum = t;
  }
  return sum;
}

void require_interior(const TruncatedPmf& theta, const char* op) {
  for (std::size_t i = 0; i < theta.cells(); ++i) {
    if (!(theta[i] > 0.0))
      throw DomainError(std::string(op) + ": theta(" + std::to_string(i) + ") is zero");
  }
}

void require_free_size(const TruncatedPmf& theta, std::span<const double> v, const char* op) {
  if (v.size() != theta.k())
    throw ParameterError(std::string(op) + ": expected vector of length " +
                         std::to_string(theta.k()) + ", got " + std::to_string(v.size()));
}

void require_same_k(const TruncatedPmf& theta, const CountVector& counts, const char* op) {
  if (theta.k() != counts.k())
    throw ParameterError(std::string(op) + ": truncation levels differ");
}

// Euler-Maclaurin remainder for sum_{i >= m} i^(-eta).
double euler_maclaurin_tail(double eta, double m) noexcept {
  const double f = std::pow(m, -eta);
  const double integral = m * f / (eta - 1.0);
  const double d1 = eta * f / m / 12.0;
  const double d3 = eta * (eta + 1.0) * (eta + 2.0) * f / (m * m * m) / 720.0;
  const double d5 = eta * (eta + 1.0) * (eta + 2.0) * (eta + 3.0) * (eta + 4.0) * f /
                    (m * m * m * m * m) / 30240.0;
  return integral + 0.5 * f + d1 - d3 + d5;
}

}  // namespace

double power_tail_sum(double eta, std::int64_t m) {
  if (!(eta > 1.0)) throw ParameterError("power_tail_sum: eta must exceed 1");
  if (m < 1) throw ParameterError("power_tail_sum: start index must be positive");
  double direct = 0.0;
  // Sum small terms first.
  for (std::int64_t i = m + kDirectTerms - 1; i >= m; --i)
    direct += std::pow(static_cast<double>(i), -eta);
  return euler_maclaurin_tail(eta, static_cast<double>(m + kDirectTerms)) + direct;
}

CountablePmf CountablePmf::explicit_pmf(std::vector<double> probs) {
  if (probs.empty()) throw ParameterError("explicit pmf: empty probability vector");
  for (double p : probs) {
    if (!(p > 0.0) || !std::isfinite(p))
      throw ParameterError("explicit pmf: probabilities must be strictly positive");
  }
  if (std::fabs(compensated_sum(probs) - 1.0) > 1e-12)
    throw ParameterError("explicit pmf: probabilities must sum to 1");
  CountablePmf pmf;
  pmf.family_ = PmfFamily::explicit_vector;
  pmf.alias_ = std::make_shared<const AliasTable>(probs);
  pmf.probs_ = std::move(probs);
  return pmf;
}

CountablePmf CountablePmf::exponential(double eta) {
  if (!(eta > 0.0) || !std::isfinite(eta))
    throw ParameterError("exponential envelope: eta must be positive");
  CountablePmf pmf;
  pmf.family_ = PmfFamily::exponential_envelope;
  pmf.eta_ = eta;
  return pmf;
}

CountablePmf CountablePmf::polynomial(double eta) {
  if (!(eta > 1.0) || !std::isfinite(eta))
    throw ParameterError("polynomial envelope: eta must exceed 1");
  CountablePmf pmf;
  pmf.family_ = PmfFamily::polynomial_envelope;
  pmf.eta_ = eta;
  pmf.log_normalizer_ = std::log(power_tail_sum(eta, 1));
  return pmf;
}

std::optional<std::int64_t> CountablePmf::support_size() const noexcept {
  if (family_ == PmfFamily::explicit_vector) return static_cast<std::int64_t>(probs_.size());
  return std::nullopt;
}

double CountablePmf::prob(std::int64_t i) const {
  if (i < 1) throw InputError("pmf: symbols start at 1");
  if (family_ == PmfFamily::explicit_vector)
    return i <= static_cast<std::int64_t>(probs_.size()) ? probs_[i - 1] : 0.0;
  return std::exp(log_prob(i));
}

double CountablePmf::log_prob(std::int64_t i) const {
  if (i < 1) throw InputError("pmf: symbols start at 1");
  switch (family_) {
    case PmfFamily::explicit_vector:
      return i <= static_cast<std::int64_t>(probs_.size()) ? std::log(probs_[i - 1]) : -kInf;
    case PmfFamily::exponential_envelope:
      return std::log(-std::expm1(-eta_)) - eta_ * static_cast<double>(i - 1);
    case PmfFamily::polynomial_envelope:
      return -eta_ * std::log(static_cast<double>(i)) - log_normalizer_;
  }
  return -kInf;
}

double CountablePmf::tail(std::int64_t k) const {
  if (k < 0) throw ParameterError("pmf tail: k must be non-negative");
  if (family_ == PmfFamily::explicit_vector) {
    const auto m = static_cast<std::int64_t>(probs_.size());
    if (k >= m) return 0.0;
    return compensated_sum(std::span<const double>(probs_).subspan(k));
  }
  return std::exp(log_tail(k));
}

double CountablePmf::log_tail(std::int64_t k) const {
  if (k < 0) throw ParameterError("pmf tail: k must be non-negative");
  switch (family_) {
    case PmfFamily::explicit_vector: {
      const double t = tail(k);
      return t > 0.0 ? std::log(t) : -kInf;
    }
    case PmfFamily::exponential_envelope:
      return -eta_ * static_cast<double>(k);
    case PmfFamily::polynomial_envelope:
      return std::log(power_tail_sum(eta_, k + 1)) - log_normalizer_;
  }
  return -kInf;
}

double CountablePmf::envelope_constant() const {
  switch (family_) {
    case PmfFamily::exponential_envelope:
      return std::exp(eta_) / (-std::expm1(-eta_));
    case PmfFamily::polynomial_envelope:
      return std::exp(log_normalizer_);
    case PmfFamily::explicit_vector:
      break;
  }
  throw ParameterError("envelope constant: explicit pmf has no envelope");
}

std::int64_t CountablePmf::sample(Rng& rng) const {
  switch (family_) {
    case PmfFamily::explicit_vector:
      return static_cast<std::int64_t>(alias_->draw(rng)) + 1;
    case PmfFamily::exponential_envelope: {
      const double x = std::floor(-std::log(rng.uniform()) / eta_);
      return x < 4e18 ? static_cast<std::int64_t>(x) + 1
                      : std::numeric_limits<std::int64_t>::max();
    }
    case PmfFamily::polynomial_envelope: {
      // Devroye's rejection sampler for the zeta distribution.
      const double a1 = eta_ - 1.0;
      const double b = std::exp2(a1);
      for (;;) {
        const double u = rng.uniform();
        const double v = rng.uniform();
        const double x = std::floor(std::pow(u, -1.0 / a1));
        if (!(x < 4e18)) continue;
        const double t = std::pow(1.0 + 1.0 / x, a1);
        if (v * x * (t - 1.0) / (b - 1.0) <= t / b) return static_cast<std::int64_t>(x);
      }
    }
  }
  return 1;
}

std::vector<std::int64_t> CountablePmf::sample(std::int64_t n, Rng& rng) const {
  if (n < 0) throw ParameterError("pmf sample: negative sample size");
  std::vector<std::int64_t> out(static_cast<std::size_t>(n));
  for (auto& x : out) x = sample(rng);
  return out;
}

TruncatedPmf::TruncatedPmf(std::vector<double> probs) : probs_(std::move(probs)) {
  if (probs_.size() < 2) throw ParameterError("truncated pmf: need k >= 1");
  for (double p : probs_) {
    if (!(p >= 0.0 && p <= 1.0))
      throw ParameterError("truncated pmf: probabilities must lie in [0, 1]");
  }
  if (std::fabs(compensated_sum(probs_) - 1.0) > 1e-12)
    throw ParameterError("truncated pmf: probabilities must sum to 1");
}

bool TruncatedPmf::interior() const noexcept {
  for (double p : probs_)
    if (!(p > 0.0)) return false;
  return true;
}

double TruncatedPmf::min_prob() const noexcept {
  double m = probs_[0];
  for (double p : probs_) m = std::min(m, p);
  return m;
}

CountVector::CountVector(std::vector<std::int64_t> counts) : counts_(std::move(counts)) {
  if (counts_.size() < 2) throw ParameterError("count vector: need k >= 1");
  for (auto c : counts_) {
    if (c < 0) throw InputError("count vector: counts must be non-negative");
    n_ += c;
  }
}

Perturbation::Perturbation(std::vector<double> h_, TruncatedPmf theta0_, std::int64_t n_)
    : h(std::move(h_)), theta0(std::move(theta0_)), n(n_) {
  if (h.size() != theta0.cells())
    throw ParameterError("perturbation: h and theta0 have different lengths");
  if (n <= 0) throw ParameterError("perturbation: n must be positive");
}

Perturbation Perturbation::from_free(std::span<const double> free, TruncatedPmf theta0,
                                     std::int64_t n) {
  if (free.size() != theta0.k())
    throw ParameterError("perturbation: free coordinates must have length k");
  std::vector<double> h(free.size() + 1);
  double sum = 0.0;
  for (std::size_t i = 0; i < free.size(); ++i) {
    h[i + 1] = free[i];
    sum += free[i];
  }
  h[0] = -sum;
  return Perturbation(std::move(h), std::move(theta0), n);
}

Perturbation Perturbation::between(const TruncatedPmf& theta, TruncatedPmf theta0,
                                   std::int64_t n) {
  if (theta.k() != theta0.k()) throw ParameterError("perturbation: truncation levels differ");
  const double s = std::sqrt(static_cast<double>(n));
  std::vector<double> h(theta.cells());
  for (std::size_t i = 0; i < h.size(); ++i) h[i] = s * (theta[i] - theta0[i]);
  return Perturbation(std::move(h), std::move(theta0), n);
}

TruncatedPmf truncate(const CountablePmf& pmf, std::int64_t k) {
  if (k < 1) throw ParameterError("truncate: k must be at least 1");
  std::vector<double> probs(static_cast<std::size_t>(k) + 1);
  for (std::int64_t i = 1; i <= k; ++i) probs[i] = pmf.prob(i);
  probs[0] = pmf.tail(k);
  return TruncatedPmf(std::move(probs));
}

CountVector tally(std::span<const std::int64_t> sample, std::int64_t k) {
  if (k < 1) throw ParameterError("tally: k must be at least 1");
  if (sample.empty()) throw InputError("tally: empty sample");
  std::vector<std::int64_t> counts(static_cast<std::size_t>(k) + 1, 0);
  for (auto x : sample) {
    if (x < 1) throw InputError("tally: symbols must be positive, got " + std::to_string(x));
    ++counts[x <= k ? static_cast<std::size_t>(x) : 0];
  }
  return CountVector(std::move(counts));
}

TruncatedPmf mle(const CountVector& counts) {
  if (counts.n() == 0) throw InputError("mle: empty sample");
  const double n = static_cast<double>(counts.n());
  std::vector<double> probs(counts.cells());
  for (std::size_t i = 0; i < probs.size(); ++i) probs[i] = static_cast<double>(counts[i]) / n;
  return TruncatedPmf(std::move(probs));
}

double log_likelihood(const TruncatedPmf& theta, const CountVector& counts) {
  require_same_k(theta, counts, "log_likelihood");
  double sum = 0.0;
  for (std::size_t i = 0; i < theta.cells(); ++i) {
    if (counts[i] == 0) continue;
    if (theta[i] == 0.0) return -kInf;
    sum += static_cast<double>(counts[i]) * std::log(theta[i]);
  }
  return sum;
}

std::vector<double> score(const TruncatedPmf& theta, const CountVector& counts) {
  require_same_k(theta, counts, "score");
  require_interior(theta, "score");
  const double tail_term = static_cast<double>(counts[0]) / theta[0];
  std::vector<double> out(theta.k());
  for (std::size_t i = 1; i < theta.cells(); ++i)
    out[i - 1] = static_cast<double>(counts[i]) / theta[i] - tail_term;
  return out;
}

FisherMatrix fisher_matrix(const TruncatedPmf& theta) {
  require_interior(theta, "fisher_matrix");
  FisherMatrix m;
  m.diag.resize(theta.k());
  for (std::size_t i = 1; i < theta.cells(); ++i) m.diag[i - 1] = 1.0 / theta[i];
  m.rank_one = 1.0 / theta[0];
  return m;
}

InverseFisher inverse_fisher(const TruncatedPmf& theta) {
  InverseFisher m;
  m.diag.assign(theta.probs().begin() + 1, theta.probs().end());
  m.w = m.diag;
  return m;
}

std::vector<double> fisher_apply(const TruncatedPmf& theta, std::span<const double> v) {
  require_free_size(theta, v, "fisher_apply");
  require_interior(theta, "fisher_apply");
  const double shared = std::accumulate(v.begin(), v.end(), 0.0) / theta[0];
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / theta[i + 1] + shared;
  return out;
}

std::vector<double> fisher_inverse_apply(const TruncatedPmf& theta, std::span<const double> v) {
  require_free_size(theta, v, "fisher_inverse_apply");
  double dot = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) dot += theta[i + 1] * v[i];
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = theta[i + 1] * (v[i] - dot);
  return out;
}

double det_fisher(const TruncatedPmf& theta) {
  require_interior(theta, "det_fisher");
  double sum = 0.0;
  for (double p : theta.probs()) sum -= std::log(p);
  return sum;
}

std::vector<double> delta_n(const TruncatedPmf& theta, const CountVector& counts) {
  require_same_k(theta, counts, "delta_n");
  if (counts.n() == 0) throw InputError("delta_n: empty sample");
  const double n = static_cast<double>(counts.n());
  const double s = std::sqrt(n);
  std::vector<double> out(theta.k());
  for (std::size_t i = 1; i < theta.cells(); ++i)
    out[i - 1] = s * (static_cast<double>(counts[i]) / n - theta[i]);
  return out;
}

double pearson_statistic(const TruncatedPmf& theta, const CountVector& counts) {
  require_same_k(theta, counts, "pearson_statistic");
  require_interior(theta, "pearson_statistic");
  if (counts.n() == 0) throw InputError("pearson_statistic: empty sample");
  const double n = static_cast<double>(counts.n());
  double sum = 0.0;
  for (std::size_t i = 0; i < theta.cells(); ++i) {
    const double expected = n * theta[i];
    const double d = static_cast<double>(counts[i]) - expected;
    sum += d * d / expected;
  }
  return sum;
}

double fisher_quadratic(const TruncatedPmf& theta0, std::span<const double> h) {
  if (h.size() != theta0.cells())
    throw ParameterError("fisher_quadratic: h and theta0 have different lengths");
  double sum = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i] == 0.0) continue;
    if (theta0[i] == 0.0) return kInf;
    sum += h[i] * h[i] / theta0[i];
  }
  return sum;
}

double fisher_quadratic(const Perturbation& p) { return fisher_quadratic(p.theta0, p.h); }

bool ellipsoid_membership(const Perturbation& p, double M) {
  if (std::fabs(std::accumulate(p.h.begin(), p.h.end(), 0.0)) > 1e-10) return false;
  const double s = std::sqrt(static_cast<double>(p.n));
  for (std::size_t i = 0; i < p.h.size(); ++i)
    if (p.h[i] < -s * p.theta0[i]) return false;
  return fisher_quadratic(p) <= M;
}

double hellinger(const TruncatedPmf& a, const TruncatedPmf& b) {
  if (a.k() != b.k()) throw ParameterError("hellinger: truncation levels differ");
  double sum = 0.0;
  for (std::size_t i = 0; i < a.cells(); ++i) {
    const double d = std::sqrt(a[i]) - std::sqrt(b[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

double taylor_remainder(double u) noexcept {
  if (u == 0.0) return 0.0;
  if (std::fabs(u) < 0.05) {
    // R(u) = sum_{j >= 3} (-1)^(j+1) u^(j-2) / j
    double power = u;
    double sum = 0.0;
    for (int j = 3; j < 40; ++j) {
      const double term = power / j;
      sum += (j % 2 == 1) ? term : -term;
      if (std::fabs(term) < 1e-18 * std::fabs(sum)) break;
      power *= u;
    }
    return sum;
  }
  return (std::log1p(u) - u + 0.5 * u * u) / (u * u);
}

TaylorDecomposition taylor_decompose(const Perturbation& p, const CountVector& counts) {
  if (p.theta0.k() != counts.k())
    throw ParameterError("taylor_decompose: truncation levels differ");
  const double n = static_cast<double>(p.n);
  const double s = std::sqrt(n);
  TaylorDecomposition out;
  double weighted_sq = 0.0;
  for (std::size_t i = 0; i < p.h.size(); ++i) {
    const double hi = p.h[i];
    if (hi == 0.0) continue;
    const double t0 = p.theta0[i];
    const double perturbed = t0 + hi / s;
    if (!(t0 > 0.0) || !(perturbed > 0.0 && perturbed < 1.0))
      throw DomainError("taylor_decompose: perturbed point leaves the open simplex at cell " +
                        std::to_string(i));
    const double u = hi / (s * t0);
    const double ni = static_cast<double>(counts[i]);
    out.sigma_sq += hi * hi / t0;
    out.z += ni * hi / t0;
    const double sq = ni * u * u;  // N_i h^2 / (n theta0^2)
    weighted_sq += sq;
    out.c += sq * taylor_remainder(u);
    out.log_ratio += ni * std::log1p(u);
  }
  out.z /= s;
  out.a = out.sigma_sq - weighted_sq;
  return out;
}

}  // namespace bvm
