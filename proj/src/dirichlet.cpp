#include "bvm/dirichlet.hpp"

#include <cmath>
#include <limits>

#include "bvm/errors.hpp"
#include "bvm/parallel.hpp"
#include "bvm/rng.hpp"

namespace bvm {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// One stream per (draw, cell), so a cell's variates do not depend on the
// shapes of the other cells.
void fill_gamma_row(std::span<const double> params, std::uint64_t seed, std::uint64_t draw,
                    std::span<double> out) {
  double total = 0.0;
  for (std::size_t j = 0; j < params.size(); ++j) {
    Rng rng(derive_seed(seed, {draw, static_cast<std::uint64_t>(j)}));
    out[j] = std::max(rng.gamma(params[j]), std::numeric_limits<double>::min());
    total += out[j];
  }
  for (double& x : out) x /= total;
}

}  // namespace

DirichletDistribution::DirichletDistribution(std::vector<double> params)
    : params_(std::move(params)) {
  if (params_.size() < 2) throw ParameterError("dirichlet: need at least two cells");
  for (double b : params_) {
    if (!(b > 0.0) || !std::isfinite(b))
      throw ParameterError("dirichlet: parameters must be positive and finite");
    total_ += b;
    log_normalizer_ -= std::lgamma(b);
  }
  log_normalizer_ += std::lgamma(total_);
}

DirichletDistribution DirichletDistribution::symmetric(std::size_t k, double beta) {
  return DirichletDistribution(std::vector<double>(k + 1, beta));
}

std::vector<double> PosteriorDrawSet::column(std::size_t j) const {
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) out[i] = data[i * cells + j];
  return out;
}

double log_density(const DirichletDistribution& d, std::span<const double> theta) {
  if (theta.size() != d.cells()) throw ParameterError("log_density: dimension mismatch");
  double sum = d.log_normalizer();
  bool pos_inf = false, neg_inf = false;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double e = d[i] - 1.0;
    if (theta[i] > 0.0) {
      if (e != 0.0) sum += e * std::log(theta[i]);
    } else if (e > 0.0) {
      neg_inf = true;
    } else if (e < 0.0) {
      pos_inf = true;
    }
  }
  if (pos_inf && neg_inf) return std::numeric_limits<double>::quiet_NaN();
  if (pos_inf) return kInf;
  if (neg_inf) return -kInf;
  return sum;
}

double log_density(const DirichletDistribution& d, const TruncatedPmf& theta) {
  return log_density(d, theta.probs());
}

DirichletDistribution posterior(const DirichletDistribution& prior, const CountVector& counts) {
  if (prior.cells() != counts.cells()) throw ParameterError("posterior: dimension mismatch");
  std::vector<double> params(prior.params().begin(), prior.params().end());
  for (std::size_t i = 0; i < params.size(); ++i) params[i] += static_cast<double>(counts[i]);
  return DirichletDistribution(std::move(params));
}

PosteriorDrawSet sample_dirichlet(const DirichletDistribution& d, std::size_t m,
                                  std::uint64_t seed, unsigned threads) {
  PosteriorDrawSet set;
  set.m = m;
  set.cells = d.cells();
  set.seed = seed;
  set.data.resize(m * set.cells);
  parallel_for(m, threads, [&](std::size_t i) {
    fill_gamma_row(d.params(), seed, static_cast<std::uint64_t>(i),
                   std::span<double>(set.data).subspan(i * set.cells, set.cells));
  });
  return set;
}

PosteriorDrawSet sample_posterior_streamwise(double beta, std::span<const std::int64_t> sample,
                                             std::int64_t k, std::size_t m, std::uint64_t seed) {
  if (!(beta > 0.0)) throw ParameterError("streamwise sampler: beta must be positive");
  if (k < 1) throw ParameterError("streamwise sampler: k must be at least 1");
  if (sample.empty()) throw InputError("streamwise sampler: empty sample");
  std::vector<std::size_t> cell(sample.size());
  for (std::size_t j = 0; j < sample.size(); ++j) {
    if (sample[j] < 1) throw InputError("streamwise sampler: symbols must be positive");
    cell[j] = sample[j] <= k ? static_cast<std::size_t>(sample[j]) : 0;
  }
  PosteriorDrawSet set;
  set.m = m;
  set.cells = static_cast<std::size_t>(k) + 1;
  set.seed = seed;
  set.data.assign(m * set.cells, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    std::span<double> row = std::span<double>(set.data).subspan(i * set.cells, set.cells);
    for (std::size_t j = 0; j < cell.size(); ++j) row[cell[j]] += rng.exponential();
    double total = 0.0;
    for (double& x : row) {
      x = std::max(x + rng.gamma(beta), std::numeric_limits<double>::min());
      total += x;
    }
    for (double& x : row) x /= total;
  }
  return set;
}

SmoothnessBound smoothness_ratio_bound(double beta, const TruncatedPmf& theta0, double M,
                                       std::int64_t n) {
  if (!(beta > 0.0)) throw ParameterError("smoothness bound: beta must be positive");
  if (!(M >= 0.0)) throw ParameterError("smoothness bound: M must be non-negative");
  const double scale = static_cast<double>(n) * theta0.min_prob();
  if (!(scale > 0.0)) throw DomainError("smoothness bound: n min theta0 must be positive");
  const double b = beta - 1.0;
  const double k1 = static_cast<double>(theta0.k() + 1);
  SmoothnessBound out;
  out.value = std::exp(3.0 * std::sqrt(M * k1 * b * b / scale));
  out.precondition_ok = std::sqrt(M / scale) <= 0.5;
  return out;
}

}  // namespace bvm
