#include "bvm/bounds.hpp"

#include <cmath>
#include <vector>

#include "bvm/errors.hpp"
#include "bvm/parallel.hpp"
#include "bvm/rng.hpp"
#include "bvm/special.hpp"

namespace bvm {
namespace {

void require_k(std::int64_t k) {
  if (k < 1) throw ParameterError("tail bound: k must be at least 1");
}

double scale(std::int64_t n, double theta_min) {
  const double s = static_cast<double>(n) * theta_min;
  if (!(s > 0.0)) throw ParameterError("tail bound: n theta_min must be positive");
  return std::sqrt(s);
}

TailBoundSpec make(TailKind kind, std::int64_t k, double level, std::int64_t n, double theta_min,
                   double threshold, double raw) {
  TailBoundSpec s;
  s.kind = kind;
  s.k = k;
  s.level = level;
  s.n = n;
  s.theta_min = theta_min;
  s.threshold = threshold;
  s.raw_bound = raw;
  s.probability_bound = std::min(1.0, raw);
  return s;
}

}  // namespace

std::string to_string(TailKind kind) {
  switch (kind) {
    case TailKind::chi_square: return "chi-square";
    case TailKind::pearson_centered: return "pearson-centered";
    case TailKind::pearson_noncentered: return "pearson-noncentered";
  }
  return "chi-square";
}

std::string to_string(TailDirection d) { return d == TailDirection::upper ? "upper" : "lower"; }

TailDirection natural_direction(TailKind kind) noexcept {
  return kind == TailKind::pearson_noncentered ? TailDirection::lower : TailDirection::upper;
}

TailBoundSpec chi_square_bound(std::int64_t k, double x) {
  require_k(k);
  if (!(x >= 0.0)) throw ParameterError("chi_square_bound: x must be non-negative");
  return make(TailKind::chi_square, k, x, 0, 0.0,
              std::sqrt(static_cast<double>(k)) + std::sqrt(2.0 * x), std::exp(-x));
}

TailBoundSpec pearson_centered_bound(std::int64_t k, double x, std::int64_t n, double theta_min) {
  require_k(k);
  if (!(x >= 0.0)) throw ParameterError("pearson_centered_bound: x must be non-negative");
  const double s = scale(n, theta_min);
  return make(TailKind::pearson_centered, k, x, n, theta_min,
              2.0 * std::sqrt(static_cast<double>(k)) + std::sqrt(2.0 * x) + 3.0 * x / s,
              std::exp(-x));
}

TailBoundSpec pearson_noncentered_bound(std::int64_t k, double M, std::int64_t n,
                                        double theta_min) {
  require_k(k);
  if (!(M >= 0.0)) throw ParameterError("pearson_noncentered_bound: M must be non-negative");
  const double s = scale(n, theta_min);
  return make(TailKind::pearson_noncentered, k, M, n, theta_min,
              2.0 * std::sqrt(static_cast<double>(k)) + std::sqrt(M / 2.0) + 3.0 * M / (4.0 * s),
              2.0 * std::exp(-M / 96.0));
}

TruncatedPmf spiked_theta0(std::int64_t k, double theta_small) {
  require_k(k);
  if (!(theta_small > 0.0 && theta_small < 1.0))
    throw ParameterError("spiked_theta0: theta_small must lie in (0, 1)");
  std::vector<double> p(static_cast<std::size_t>(k) + 1,
                        (1.0 - theta_small) / static_cast<double>(k));
  p.back() = theta_small;
  return TruncatedPmf(std::move(p));
}

TruncatedPmf perturb_toward(const TruncatedPmf& theta0, std::size_t j, double lambda) {
  if (j >= theta0.cells()) throw ParameterError("perturb_toward: cell out of range");
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw ParameterError("perturb_toward: lambda must lie in [0, 1]");
  std::vector<double> p(theta0.probs().begin(), theta0.probs().end());
  for (double& x : p) x *= 1.0 - lambda;
  p[j] += lambda;
  return TruncatedPmf(std::move(p));
}

double lambda_for_sigma_sq(const TruncatedPmf& theta0, std::size_t j, std::int64_t n,
                           double sigma_sq) {
  if (j >= theta0.cells()) throw ParameterError("lambda_for_sigma_sq: cell out of range");
  const double t = theta0[j];
  const double lambda = std::sqrt(sigma_sq / (static_cast<double>(n) * (1.0 / t - 1.0)));
  if (!(lambda <= 1.0))
    throw GuardRejection("non-centered alternative: sigma_n^2 out of reach for this n");
  return lambda;
}

TruncatedPmf noncentered_alternative(const TailBoundSpec& spec, const TruncatedPmf& theta0,
                                     std::size_t j) {
  if (spec.kind != TailKind::pearson_noncentered)
    throw ParameterError("noncentered_alternative: spec is not the non-centered bound");
  const double sigma = std::max(std::sqrt(spec.level), 2.0 * spec.threshold);
  return perturb_toward(theta0, j, lambda_for_sigma_sq(theta0, j, spec.n, sigma * sigma));
}

ExceedanceResult estimate_exceedance(const TailBoundSpec& spec, const SamplingConfig& sampling,
                                     std::int64_t R, std::uint64_t seed, unsigned threads) {
  if (R < 1000) throw GuardRejection("verify_exceedance: need at least 1000 replications");
  if (sampling.direction != natural_direction(spec.kind))
    throw ParameterError("verify_exceedance: " + to_string(spec.kind) + " is a " +
                         to_string(natural_direction(spec.kind)) + "-tail event, got " +
                         to_string(sampling.direction));
  const TruncatedPmf* theta0 = nullptr;
  const TruncatedPmf* sample_from = nullptr;
  if (spec.kind != TailKind::chi_square) {
    if (!sampling.theta0) throw ParameterError("verify_exceedance: theta0 required");
    theta0 = &*sampling.theta0;
    if (static_cast<std::int64_t>(theta0->k()) != spec.k)
      throw ParameterError("verify_exceedance: theta0 has the wrong truncation level");
    sample_from = theta0;
  }
  if (spec.kind == TailKind::pearson_noncentered) {
    if (!sampling.theta_alt) throw ParameterError("verify_exceedance: theta_alt required");
    const Perturbation p = Perturbation::between(*sampling.theta_alt, *theta0, spec.n);
    const double sigma_sq = fisher_quadratic(p);
    if (sigma_sq < spec.level * (1.0 - 1e-12))
      throw GuardRejection("verify_exceedance: sigma_n^2(h) below M");
    if (std::sqrt(sigma_sq) < 2.0 * spec.threshold * (1.0 - 1e-12))
      throw GuardRejection("verify_exceedance: sigma_n(h) below 2 s_n(M/4)");
    sample_from = &*sampling.theta_alt;
  }

  std::vector<unsigned char> hit(static_cast<std::size_t>(R), 0);
  const double t2 = spec.threshold * spec.threshold;
  parallel_for(static_cast<std::size_t>(R), threads, [&](std::size_t r) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(r)}));
    if (spec.kind == TailKind::chi_square) {
      const double xi2 = 2.0 * rng.gamma(0.5 * static_cast<double>(spec.k));
      hit[r] = xi2 >= t2;
      return;
    }
    const CountVector counts(multinomial(spec.n, sample_from->probs(), rng));
    const double v2 = pearson_statistic(*theta0, counts);
    hit[r] = sampling.direction == TailDirection::upper ? v2 >= t2 : v2 < t2;
  });

  ExceedanceResult out;
  out.replications = R;
  for (auto h : hit) out.exceedances += h;
  const double dR = static_cast<double>(R);
  out.p_hat = static_cast<double>(out.exceedances) / dR;
  out.se = std::sqrt(out.p_hat * (1.0 - out.p_hat) / dR);
  out.pass = out.p_hat <= spec.probability_bound + 3.0 * out.se;
  if (spec.kind == TailKind::chi_square) {
    const double p = chi_square_sf(static_cast<double>(spec.k), t2);
    out.oracle_p = p;
    out.oracle_agrees = std::fabs(out.p_hat - p) <= 3.0 * std::sqrt(p * (1.0 - p) / dR);
  }
  return out;
}

ExperimentReport verify_exceedance(const TailBoundSpec& spec, const SamplingConfig& sampling,
                                   std::int64_t R, std::uint64_t seed, unsigned threads) {
  const ExceedanceResult res = estimate_exceedance(spec, sampling, R, seed, threads);
  ExperimentReport rep;
  rep.name = "verify_" + to_string(spec.kind);
  rep.kind = "verify-bounds";
  rep.add_param("seed", std::to_string(seed));
  rep.add_param("R", R);
  rep.columns = {"kind",     "k",         "level", "n",     "theta_min", "threshold",
                 "bound",    "raw_bound", "direction", "p_hat", "se",     "oracle_p",
                 "oracle_agrees", "verdict"};
  rep.add_row({to_string(spec.kind), spec.k, spec.level, spec.n, spec.theta_min, spec.threshold,
               spec.probability_bound, spec.raw_bound, to_string(sampling.direction), res.p_hat,
               res.se, res.oracle_p ? Cell(*res.oracle_p) : Cell(std::string()),
               res.oracle_agrees ? Cell(*res.oracle_agrees) : Cell(std::string()),
               std::string(res.pass ? "pass" : "fail")});
  rep.verdict = res.pass && res.oracle_agrees.value_or(true) ? "pass" : "fail";
  if (spec.raw_bound > 1.0) rep.notes.push_back("bound exceeds 1 and is vacuous");
  return rep;
}

}  // namespace bvm
