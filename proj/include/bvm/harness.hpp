#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "bvm/dirichlet.hpp"
#include "bvm/model.hpp"
#include "bvm/report.hpp"
#include "bvm/rng.hpp"
#include "bvm/schedules.hpp"

namespace bvm {

/// N_k(center, I^{-1}(theta0)) on coordinates 1..k.
class GaussianLimit {
 public:
  GaussianLimit(TruncatedPmf theta0, std::vector<double> center);
  /// Centered at Delta_n(theta0) for the given counts.
  static GaussianLimit at(TruncatedPmf theta0, const CountVector& counts);

  std::size_t k() const noexcept { return center_.size(); }
  const TruncatedPmf& theta0() const noexcept { return theta0_; }
  std::span<const double> center() const noexcept { return center_; }
  double log_normalizer() const noexcept { return log_normalizer_; }

  /// v_i = sqrt(theta_i) z_i - theta_i sum_j sqrt(theta_j) z_j over cells 0..k,
  /// keeping cells 1..k and adding the center.
  void sample(Rng& rng, std::span<double> out) const;

 private:
  TruncatedPmf theta0_;
  std::vector<double> center_;
  std::vector<double> sqrt_theta_;
  double log_normalizer_ = 0.0;
};

/// m x k row-major; draw j uses the stream derive_seed(seed, {j}).
std::vector<double> sample_gaussian_limit(const GaussianLimit& gl, std::size_t m,
                                          std::uint64_t seed);
double gaussian_log_density(const GaussianLimit& gl, std::span<const double> h);

/// Density of H = sqrt(n)(tau - theta0) at the free coordinates h(1..k) when
/// tau follows the Dirichlet `post`; -inf outside the simplex.
double posterior_h_log_density(const DirichletDistribution& post, const TruncatedPmf& theta0,
                               std::int64_t n, std::span<const double> h);

struct TvEstimate {
  double value = 0.0;
  double std_error = 0.0;
  std::size_t m = 0;
};

using LogDensity = std::function<double(std::span<const double>)>;

/// E_q[(1 - p/q)^+] with q the Gaussian limit; draws where p vanishes count 1.
TvEstimate tv_estimate(const LogDensity& log_p, const GaussianLimit& gl, std::size_t m,
                       std::uint64_t seed, unsigned threads = 1);

/// TV between P conditioned on A and P, for a discrete P.
double conditioned_tv(std::span<const double> probs, const std::vector<bool>& in_a);

/// Exact sup over closed intervals I of |P_emp(I) - Phi(I)|.
double interval_sup_distance(std::span<const double> values);

struct ConcentrationConfig {
  CountablePmf pmf;
  TruncationSchedule schedule;
  MRule m_rule;
  double beta = 1.0;
  std::vector<double> n_grid;
  std::size_t m = 2000;
  std::int64_t R = 50;
};

/// Mean posterior mass outside the Fisher ball {h : h^T I(theta0) h < M_n}.
/// Replication r uses the same data and draw streams at every grid point.
ExperimentReport concentration_experiment(const ConcentrationConfig& cfg, std::uint64_t seed,
                                          unsigned threads = 1);

struct TvConfig {
  CountablePmf pmf;
  TruncationSchedule schedule;
  double beta = 1.0;
  std::vector<double> n_grid;
  std::size_t m = 20000;
};

ExperimentReport tv_experiment(const TvConfig& cfg, std::uint64_t seed, unsigned threads = 1);

struct FunctionalCltConfig {
  CountablePmf pmf;
  TruncationSchedule schedule;
  double beta = 1.0;
  double alpha = 1.0;
  std::vector<double> n_grid;
  std::size_t m = 5000;
};

/// Interval sup distance between sqrt(n)(G(T) - G(theta_hat)) / gamma(theta0)
/// under the posterior and N(0, 1).
ExperimentReport functional_clt_experiment(const FunctionalCltConfig& cfg, std::uint64_t seed,
                                           unsigned threads = 1);

struct MleCltConfig {
  CountablePmf pmf;
  TruncationSchedule schedule;
  double alpha = 1.0;
  std::vector<double> n_grid;
  std::int64_t R = 1000;
};

/// Kolmogorov distance between sqrt(n)(G(theta_hat) - G(theta0)) / gamma and
/// N(0, 1), with the three precondition quantities tabulated.
ExperimentReport mle_clt_experiment(const MleCltConfig& cfg, std::uint64_t seed,
                                    unsigned threads = 1);

struct CoverageConfig {
  CountablePmf pmf;
  TruncationSchedule schedule;
  double beta = 1.0;
  double alpha = 1.0;
  double delta = 0.1;
  std::vector<double> n_grid;
  std::size_t m = 3000;
  std::int64_t R = 500;
  /// Wald variance at theta0 instead of the MLE.
  bool wald_oracle = false;
};

/// Coverage of the full functional by credible and Wald intervals.
ExperimentReport coverage_experiment(const CoverageConfig& cfg, std::uint64_t seed,
                                     unsigned threads = 1);

}  // namespace bvm
