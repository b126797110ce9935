#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "bvm/model.hpp"

namespace bvm {

class DirichletDistribution {
 public:
  explicit DirichletDistribution(std::vector<double> params);
  static DirichletDistribution symmetric(std::size_t k, double beta);

  std::size_t k() const noexcept { return params_.size() - 1; }
  std::size_t cells() const noexcept { return params_.size(); }
  std::span<const double> params() const noexcept { return params_; }
  double operator[](std::size_t i) const noexcept { return params_[i]; }
  double total() const noexcept { return total_; }
  /// log Gamma(sum beta) - sum log Gamma(beta_i).
  double log_normalizer() const noexcept { return log_normalizer_; }

 private:
  std::vector<double> params_;
  double total_ = 0.0;
  double log_normalizer_ = 0.0;
};

/// m x (k+1) row-major simplex points plus the seed that produced them.
struct PosteriorDrawSet {
  std::size_t m = 0;
  std::size_t cells = 0;
  std::vector<double> data;
  std::uint64_t seed = 0;

  std::span<const double> row(std::size_t i) const noexcept {
    return std::span<const double>(data).subspan(i * cells, cells);
  }
  /// Column j as a vector.
  std::vector<double> column(std::size_t j) const;
};

/// Density with respect to Lebesgue measure on the free coordinates 1..k.
/// On the boundary a zero cell contributes -inf when beta_i > 1, +inf when
/// beta_i < 1 and nothing when beta_i == 1; mixed signs give NaN.
double log_density(const DirichletDistribution& d, const TruncatedPmf& theta);
double log_density(const DirichletDistribution& d, std::span<const double> theta);

DirichletDistribution posterior(const DirichletDistribution& prior, const CountVector& counts);

/// Cell j of draw i uses the stream derive_seed(seed, {i, j}), so results do
/// not depend on the number of threads.
PosteriorDrawSet sample_dirichlet(const DirichletDistribution& d, std::size_t m,
                                  std::uint64_t seed, unsigned threads = 1);

/// Unit exponentials for each observation grouped by cell, one Gamma(beta, 1)
/// per cell, normalized by the grand total.
PosteriorDrawSet sample_posterior_streamwise(double beta, std::span<const std::int64_t> sample,
                                             std::int64_t k, std::size_t m, std::uint64_t seed);

struct SmoothnessBound {
  double value = 1.0;
  /// sqrt(M / (n min theta0)) <= 1/2.
  bool precondition_ok = true;
};

SmoothnessBound smoothness_ratio_bound(double beta, const TruncatedPmf& theta0, double M,
                                       std::int64_t n);

}  // namespace bvm
