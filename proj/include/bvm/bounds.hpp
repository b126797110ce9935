#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "bvm/model.hpp"
#include "bvm/report.hpp"

namespace bvm {

enum class TailKind { chi_square, pearson_centered, pearson_noncentered };
enum class TailDirection { upper, lower };

std::string to_string(TailKind kind);
std::string to_string(TailDirection direction);
/// Upper tail for the chi-square and centered Pearson bounds, lower tail for
/// the non-centered one.
TailDirection natural_direction(TailKind kind) noexcept;

struct TailBoundSpec {
  TailKind kind = TailKind::chi_square;
  std::int64_t k = 1;
  /// x for the chi-square and centered bounds, M for the non-centered one.
  double level = 0.0;
  std::int64_t n = 0;
  double theta_min = 0.0;
  double threshold = 0.0;
  /// min(1, raw_bound).
  double probability_bound = 1.0;
  double raw_bound = 1.0;
};

/// P{xi >= sqrt(k) + sqrt(2x)} <= e^-x for xi^2 ~ chi^2_k.
TailBoundSpec chi_square_bound(std::int64_t k, double x);
/// P{V_n(theta0) >= 2 sqrt(k) + sqrt(2x) + 3x / sqrt(n theta_min)} <= e^-x.
TailBoundSpec pearson_centered_bound(std::int64_t k, double x, std::int64_t n, double theta_min);
/// P_h{V_n(theta0) < 2 sqrt(k) + sqrt(M/2) + 3M / (4 sqrt(n theta_min))} <= 2 e^(-M/96)
/// when sampling from theta0 + h / sqrt(n) with sigma_n^2(h) >= M.
TailBoundSpec pearson_noncentered_bound(std::int64_t k, double M, std::int64_t n,
                                        double theta_min);

/// One cell (the last) equal to theta_small, the other k cells sharing the rest.
TruncatedPmf spiked_theta0(std::int64_t k, double theta_small);
/// (1 - lambda) theta0 + lambda e_j.
TruncatedPmf perturb_toward(const TruncatedPmf& theta0, std::size_t j, double lambda);
/// lambda such that sigma_n^2 of perturb_toward(theta0, j, lambda) equals sigma_sq.
double lambda_for_sigma_sq(const TruncatedPmf& theta0, std::size_t j, std::int64_t n,
                           double sigma_sq);
/// Alternative used for the non-centered bound: sigma_n(h) = max(sqrt(M), 2 s_n)
/// with s_n the bound threshold, perturbing toward cell j.
TruncatedPmf noncentered_alternative(const TailBoundSpec& spec, const TruncatedPmf& theta0,
                                     std::size_t j);

struct SamplingConfig {
  TailDirection direction = TailDirection::upper;
  /// Reference point for the Pearson statistic.
  std::optional<TruncatedPmf> theta0;
  /// Sampling point for the non-centered case.
  std::optional<TruncatedPmf> theta_alt;
};

struct ExceedanceResult {
  std::int64_t exceedances = 0;
  std::int64_t replications = 0;
  double p_hat = 0.0;
  double se = 0.0;
  bool pass = false;
  /// Chi-square case only: exact tail probability and its 3 SE agreement.
  std::optional<double> oracle_p;
  std::optional<bool> oracle_agrees;
};

ExceedanceResult estimate_exceedance(const TailBoundSpec& spec, const SamplingConfig& sampling,
                                     std::int64_t R, std::uint64_t seed, unsigned threads = 1);

/// One-row report: parameters, threshold, bound, p_hat, se, verdict.
ExperimentReport verify_exceedance(const TailBoundSpec& spec, const SamplingConfig& sampling,
                                   std::int64_t R, std::uint64_t seed, unsigned threads = 1);

}  // namespace bvm
