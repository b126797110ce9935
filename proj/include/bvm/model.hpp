#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "bvm/rng.hpp"

namespace bvm {

enum class PmfFamily { explicit_vector, exponential_envelope, polynomial_envelope };

/// A probability mass function on {1, 2, ...}.
///
/// The exponential envelope is the geometric law theta(i) = (1-q) q^(i-1) with
/// q = exp(-eta). The polynomial envelope is theta(i) = i^(-eta) / zeta(eta).
class CountablePmf {
 public:
  static CountablePmf explicit_pmf(std::vector<double> probs);
  static CountablePmf exponential(double eta);
  static CountablePmf polynomial(double eta);

  PmfFamily family() const noexcept { return family_; }
  /// eta for the envelope families, 0 for explicit vectors.
  double eta() const noexcept { return eta_; }
  /// Support size for explicit vectors; empty for the infinite families.
  std::optional<std::int64_t> support_size() const noexcept;
  const std::vector<double>& explicit_probs() const noexcept { return probs_; }

  double prob(std::int64_t i) const;
  double log_prob(std::int64_t i) const;
  /// sum_{i > k} theta(i).
  double tail(std::int64_t k) const;
  double log_tail(std::int64_t k) const;
  /// C in the envelope sandwich (1/C) e(i) <= theta(i) <= C e(i).
  double envelope_constant() const;

  std::int64_t sample(Rng& rng) const;
  std::vector<std::int64_t> sample(std::int64_t n, Rng& rng) const;

 private:
  CountablePmf() = default;

  PmfFamily family_ = PmfFamily::explicit_vector;
  double eta_ = 0.0;
  double log_normalizer_ = 0.0;  // log zeta(eta) for the polynomial family
  std::vector<double> probs_;
  std::shared_ptr<const AliasTable> alias_;
};

/// Unnormalized Hurwitz tail sum_{i >= m} i^(-eta) for eta > 1, m >= 1.
double power_tail_sum(double eta, std::int64_t m);

/// (theta(0), ..., theta(k)) with theta(0) the aggregated tail mass.
class TruncatedPmf {
 public:
  explicit TruncatedPmf(std::vector<double> probs);

  std::size_t k() const noexcept { return probs_.size() - 1; }
  std::size_t cells() const noexcept { return probs_.size(); }
  std::span<const double> probs() const noexcept { return probs_; }
  double operator[](std::size_t i) const noexcept { return probs_[i]; }
  /// True when theta(0) == 0; Fisher operations reject such points.
  bool tail_is_zero() const noexcept { return probs_[0] == 0.0; }
  bool interior() const noexcept;
  double min_prob() const noexcept;

 private:
  std::vector<double> probs_;
};

/// Truncated occurrence counts (N_0, ..., N_k).
class CountVector {
 public:
  explicit CountVector(std::vector<std::int64_t> counts);

  std::size_t k() const noexcept { return counts_.size() - 1; }
  std::size_t cells() const noexcept { return counts_.size(); }
  std::int64_t n() const noexcept { return n_; }
  std::span<const std::int64_t> counts() const noexcept { return counts_; }
  std::int64_t operator[](std::size_t i) const noexcept { return counts_[i]; }

 private:
  std::vector<std::int64_t> counts_;
  std::int64_t n_ = 0;
};

/// Local perturbation theta = theta0 + h / sqrt(n).
struct Perturbation {
  std::vector<double> h;  // h(0), ..., h(k)
  TruncatedPmf theta0;
  std::int64_t n;

  Perturbation(std::vector<double> h, TruncatedPmf theta0, std::int64_t n);
  /// Builds h from coordinates 1..k and sets h(0) = -sum.
  static Perturbation from_free(std::span<const double> free, TruncatedPmf theta0,
                                std::int64_t n);
  /// h = sqrt(n) (theta - theta0).
  static Perturbation between(const TruncatedPmf& theta, TruncatedPmf theta0,
                              std::int64_t n);
};

struct TaylorDecomposition {
  double z = 0.0;
  double a = 0.0;
  double c = 0.0;
  double sigma_sq = 0.0;
  double log_ratio = 0.0;
};

/// I(theta) = Diag(1/theta(i)) + (1/theta(0)) 11^T on coordinates 1..k.
struct FisherMatrix {
  std::vector<double> diag;
  double rank_one = 0.0;
};

/// I^{-1}(theta) = Diag(theta(i)) - w w^T with w = (theta(1..k)).
struct InverseFisher {
  std::vector<double> diag;
  std::vector<double> w;
};

TruncatedPmf truncate(const CountablePmf& pmf, std::int64_t k);
CountVector tally(std::span<const std::int64_t> sample, std::int64_t k);
TruncatedPmf mle(const CountVector& counts);

/// Returns -infinity when a positive count meets a zero cell.
double log_likelihood(const TruncatedPmf& theta, const CountVector& counts);
std::vector<double> score(const TruncatedPmf& theta, const CountVector& counts);

FisherMatrix fisher_matrix(const TruncatedPmf& theta);
InverseFisher inverse_fisher(const TruncatedPmf& theta);
std::vector<double> fisher_apply(const TruncatedPmf& theta, std::span<const double> v);
std::vector<double> fisher_inverse_apply(const TruncatedPmf& theta,
                                         std::span<const double> v);
/// log det I(theta) = -sum_{i=0}^k log theta(i).
double det_fisher(const TruncatedPmf& theta);

std::vector<double> delta_n(const TruncatedPmf& theta, const CountVector& counts);
double pearson_statistic(const TruncatedPmf& theta, const CountVector& counts);

/// sigma_n^2(h) = sum h(i)^2 / theta0(i), 0/0 = 0; +infinity when h(i) != 0 on a
/// zero cell.
double fisher_quadratic(const Perturbation& p);
/// Same form for a full vector h(0..k) against theta0.
double fisher_quadratic(const TruncatedPmf& theta0, std::span<const double> h);
bool ellipsoid_membership(const Perturbation& p, double M);

double hellinger(const TruncatedPmf& a, const TruncatedPmf& b);

/// R(u) = (log(1+u) - u + u^2/2) / u^2, R(0) = 0.
double taylor_remainder(double u) noexcept;
TaylorDecomposition taylor_decompose(const Perturbation& p, const CountVector& counts);

}  // namespace bvm
