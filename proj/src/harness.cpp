#include "bvm/harness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>

#include "bvm/errors.hpp"
#include "bvm/functionals.hpp"
#include "bvm/parallel.hpp"
#include "bvm/special.hpp"

namespace bvm {
namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

// Stream tags. Posterior and Gaussian draws are keyed without the grid index so
// that grid points share random numbers and trends are not masked by noise.
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kDrawStream = 2;

std::vector<std::string> standard_columns() {
  return {"n", "k_n", "M_n", "statistic", "value", "se", "verdict"};
}

ExperimentReport make_report(const std::string& name, std::uint64_t seed,
                             const TruncationSchedule& schedule) {
  ExperimentReport r;
  r.name = name;
  r.kind = name;
  r.columns = standard_columns();
  r.add_param("seed", std::to_string(seed));
  r.add_param("schedule", describe(schedule));
  if (!within_sufficient_conditions(schedule))
    r.notes.push_back("schedule is outside the sufficient conditions of the envelope results");
  return r;
}

void require_grid(const std::vector<double>& grid) {
  if (grid.empty()) throw GuardRejection("experiment: empty n grid");
  for (double n : grid)
    if (!(n >= 1.0) || n > 9e15) throw ParameterError("experiment: invalid n in grid");
}

CountVector draw_counts(const TruncatedPmf& theta0, std::int64_t n, std::uint64_t stream) {
  Rng rng(stream);
  return CountVector(multinomial(n, theta0.probs(), rng));
}

// Same law as draw_counts, but coupled across n and k by one stream: cells
// 1..k are inverted in order and cell 0 takes the remainder.
CountVector draw_counts_coupled(const TruncatedPmf& theta0, std::int64_t n, std::uint64_t stream) {
  Rng rng(stream);
  const auto p = theta0.probs();
  std::vector<double> order(p.begin() + 1, p.end());
  order.push_back(p[0]);
  const auto drawn = multinomial_inversion(n, order, rng);
  std::vector<std::int64_t> counts(p.size());
  counts[0] = drawn.back();
  std::copy(drawn.begin(), drawn.end() - 1, counts.begin() + 1);
  return CountVector(std::move(counts));
}

// Fills the trend label for `statistic` in every matching row.
void finish_trend(ExperimentReport& r, const std::string& statistic) {
  const std::size_t s = r.column("statistic");
  const std::size_t v = r.column("value");
  const std::size_t verdict = r.column("verdict");
  std::vector<double> values;
  for (const auto& row : r.rows)
    if (std::get<std::string>(row[s]) == statistic) values.push_back(std::get<double>(row[v]));
  const std::string label = to_string(classify_trend(values));
  for (auto& row : r.rows)
    if (std::get<std::string>(row[s]) == statistic) row[verdict] = label;
  r.verdict = label;
}

std::int64_t as_count(double n) { return static_cast<std::int64_t>(std::llround(n)); }

double mean_se(const std::vector<double>& x, double& se) {
  const double m = static_cast<double>(x.size());
  double mean = 0.0;
  for (double v : x) mean += v;
  mean /= m;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  se = x.size() > 1 ? std::sqrt(ss / (m - 1.0) / m) : kNan;
  return mean;
}

}  // namespace

GaussianLimit::GaussianLimit(TruncatedPmf theta0, std::vector<double> center)
    : theta0_(std::move(theta0)), center_(std::move(center)) {
  if (center_.size() != theta0_.k()) throw ParameterError("gaussian limit: center must have length k");
  if (!theta0_.interior()) throw DomainError("gaussian limit: theta0 must be interior");
  sqrt_theta_.resize(theta0_.cells());
  for (std::size_t i = 0; i < theta0_.cells(); ++i) sqrt_theta_[i] = std::sqrt(theta0_[i]);
  log_normalizer_ = -0.5 * static_cast<double>(k()) * std::log(2.0 * std::numbers::pi) +
                    0.5 * det_fisher(theta0_);
}

GaussianLimit GaussianLimit::at(TruncatedPmf theta0, const CountVector& counts) {
  std::vector<double> c = delta_n(theta0, counts);
  return GaussianLimit(std::move(theta0), std::move(c));
}

void GaussianLimit::sample(Rng& rng, std::span<double> out) const {
  const std::size_t cells = theta0_.cells();
  double z0 = rng.normal();
  double dot = sqrt_theta_[0] * z0;
  for (std::size_t i = 1; i < cells; ++i) {
    const double z = rng.normal();
    out[i - 1] = z;
    dot += sqrt_theta_[i] * z;
  }
  for (std::size_t i = 1; i < cells; ++i)
    out[i - 1] = sqrt_theta_[i] * out[i - 1] - theta0_[i] * dot + center_[i - 1];
}

std::vector<double> sample_gaussian_limit(const GaussianLimit& gl, std::size_t m,
                                          std::uint64_t seed) {
  const std::size_t k = gl.k();
  std::vector<double> out(m * k);
  for (std::size_t j = 0; j < m; ++j) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(j)}));
    gl.sample(rng, std::span<double>(out).subspan(j * k, k));
  }
  return out;
}

double gaussian_log_density(const GaussianLimit& gl, std::span<const double> h) {
  if (h.size() != gl.k()) throw ParameterError("gaussian_log_density: h must have length k");
  const TruncatedPmf& t = gl.theta0();
  double quad = 0.0, sum = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double d = h[i] - gl.center()[i];
    quad += d * d / t[i + 1];
    sum += d;
  }
  quad += sum * sum / t[0];
  return gl.log_normalizer() - 0.5 * quad;
}

double posterior_h_log_density(const DirichletDistribution& post, const TruncatedPmf& theta0,
                               std::int64_t n, std::span<const double> h) {
  if (h.size() != theta0.k() || post.cells() != theta0.cells())
    throw ParameterError("posterior_h_log_density: dimension mismatch");
  const double s = std::sqrt(static_cast<double>(n));
  std::vector<double> tau(theta0.cells());
  double shift = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    tau[i + 1] = theta0[i + 1] + h[i] / s;
    shift += h[i] / s;
    if (!(tau[i + 1] > 0.0)) return -std::numeric_limits<double>::infinity();
  }
  tau[0] = theta0[0] - shift;
  if (!(tau[0] > 0.0)) return -std::numeric_limits<double>::infinity();
  return log_density(post, tau) - 0.5 * static_cast<double>(theta0.k()) * std::log(s * s);
}

TvEstimate tv_estimate(const LogDensity& log_p, const GaussianLimit& gl, std::size_t m,
                       std::uint64_t seed, unsigned threads) {
  if (m < 1000) throw GuardRejection("tv_estimate: need at least 1000 draws");
  const std::size_t k = gl.k();
  std::vector<double> terms(m);
  parallel_for(m, threads, [&](std::size_t j) {
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(j)}));
    std::vector<double> g(k);
    gl.sample(rng, g);
    const double lp = log_p(g);
    if (!(lp > -std::numeric_limits<double>::infinity())) {
      terms[j] = 1.0;
      return;
    }
    terms[j] = std::max(0.0, -std::expm1(lp - gaussian_log_density(gl, g)));
  });
  TvEstimate out;
  out.m = m;
  out.value = std::clamp(mean_se(terms, out.std_error), 0.0, 1.0);
  return out;
}

double conditioned_tv(std::span<const double> probs, const std::vector<bool>& in_a) {
  if (probs.size() != in_a.size()) throw ParameterError("conditioned_tv: size mismatch");
  double mass = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i)
    if (in_a[i]) mass += probs[i];
  if (!(mass > 0.0)) throw DomainError("conditioned_tv: event has zero mass");
  std::vector<double> conditioned(probs.size());
  for (std::size_t i = 0; i < probs.size(); ++i) conditioned[i] = in_a[i] ? probs[i] / mass : 0.0;
  return total_variation(conditioned, probs);
}

double interval_sup_distance(std::span<const double> values) {
  if (values.empty()) throw InputError("interval_sup_distance: empty input");
  std::vector<double> x(values.begin(), values.end());
  std::sort(x.begin(), x.end());
  const double m = static_cast<double>(x.size());
  // Distinct atoms with cumulative empirical mass.
  std::vector<double> atom, cdf, phi;
  for (std::size_t i = 0; i < x.size();) {
    std::size_t j = i;
    while (j < x.size() && x[j] == x[i]) ++j;
    atom.push_back(x[i]);
    cdf.push_back(static_cast<double>(j) / m);
    phi.push_back(normal_cdf(x[i]));
    i = j;
  }
  const std::size_t d = atom.size();
  // Excess empirical mass: max over j <= l of [F(x_l) - Phi(x_l)] - [F(x_{j-1}) - Phi(x_j)].
  double best = 0.0;
  double min_left = 0.0;  // a = -inf
  for (std::size_t l = 0; l < d; ++l) {
    const double prev = l == 0 ? 0.0 : cdf[l - 1];
    min_left = std::min(min_left, prev - phi[l]);
    best = std::max(best, cdf[l] - phi[l] - min_left);
  }
  // Excess normal mass: max over j <= l of [Phi(x_{l+1}) - F(x_l)] - [Phi(x_j) - F(x_j)]
  // with x_0 = -inf and x_{d+1} = +inf.
  double min_w = 0.0;  // j = 0
  for (std::size_t l = 0; l <= d; ++l) {
    if (l > 0) min_w = std::min(min_w, phi[l - 1] - cdf[l - 1]);
    const double f = l == 0 ? 0.0 : cdf[l - 1];
    const double next_phi = l < d ? phi[l] : 1.0;
    best = std::max(best, next_phi - f - min_w);
  }
  return best;
}

ExperimentReport concentration_experiment(const ConcentrationConfig& cfg, std::uint64_t seed,
                                          unsigned threads) {
  validate(cfg.schedule);
  require_grid(cfg.n_grid);
  if (cfg.R < 2) throw GuardRejection("concentration: need at least 2 replications");
  if (cfg.m < 1) throw GuardRejection("concentration: need at least 1 posterior draw");
  ExperimentReport rep = make_report("concentration", seed, cfg.schedule);
  rep.add_param("beta", cfg.beta);
  rep.add_param("m", static_cast<std::int64_t>(cfg.m));
  rep.add_param("R", cfg.R);
  rep.add_param("M_rule", describe(cfg.m_rule));
  for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
    const double n = cfg.n_grid[gi];
    const std::int64_t nn = as_count(n);
    const std::int64_t k = truncation_level(cfg.schedule, n);
    const TruncatedPmf theta0 = truncate(cfg.pmf, k);
    const double M = m_value(cfg.m_rule, n, k, std::log(n) + std::log(theta0.min_prob()));
    const DirichletDistribution prior = DirichletDistribution::symmetric(theta0.k(), cfg.beta);
    std::vector<double> fraction(static_cast<std::size_t>(cfg.R));
    parallel_for(fraction.size(), threads, [&](std::size_t r) {
      const CountVector counts =
          draw_counts_coupled(theta0, nn, derive_seed(seed, {kDataStream, r}));
      const PosteriorDrawSet draws =
          sample_dirichlet(posterior(prior, counts), cfg.m, derive_seed(seed, {kDrawStream, r}));
      const double s = std::sqrt(n);
      std::vector<double> h(theta0.cells());
      std::size_t outside = 0;
      for (std::size_t j = 0; j < draws.m; ++j) {
        const auto row = draws.row(j);
        for (std::size_t i = 0; i < h.size(); ++i) h[i] = s * (row[i] - theta0[i]);
        if (fisher_quadratic(theta0, h) >= M) ++outside;
      }
      fraction[r] = static_cast<double>(outside) / static_cast<double>(draws.m);
    });
    double se = 0.0;
    const double mean = mean_se(fraction, se);
    rep.add_row({n, k, M, std::string("outside_fraction"), mean, se, std::string()});
  }
  finish_trend(rep, "outside_fraction");
  return rep;
}

ExperimentReport tv_experiment(const TvConfig& cfg, std::uint64_t seed, unsigned threads) {
  validate(cfg.schedule);
  require_grid(cfg.n_grid);
  ExperimentReport rep = make_report("tv", seed, cfg.schedule);
  rep.add_param("beta", cfg.beta);
  rep.add_param("m", static_cast<std::int64_t>(cfg.m));
  for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
    const double n = cfg.n_grid[gi];
    const std::int64_t nn = as_count(n);
    const std::int64_t k = truncation_level(cfg.schedule, n);
    if (k > 50) throw GuardRejection("tv experiment: k_n above 50 is not supported");
    const TruncatedPmf theta0 = truncate(cfg.pmf, k);
    const CountVector counts = draw_counts(theta0, nn, derive_seed(seed, {kDataStream, gi}));
    const DirichletDistribution post =
        posterior(DirichletDistribution::symmetric(theta0.k(), cfg.beta), counts);
    const GaussianLimit gl = GaussianLimit::at(theta0, counts);
    const TvEstimate tv = tv_estimate(
        [&](std::span<const double> g) { return posterior_h_log_density(post, theta0, nn, g); },
        gl, cfg.m, derive_seed(seed, {kDrawStream}), threads);
    rep.add_row({n, k, kNan, std::string("tv"), tv.value, tv.std_error, std::string()});
  }
  finish_trend(rep, "tv");
  return rep;
}

ExperimentReport functional_clt_experiment(const FunctionalCltConfig& cfg, std::uint64_t seed,
                                           unsigned threads) {
  validate(cfg.schedule);
  require_grid(cfg.n_grid);
  if (cfg.m < 2) throw GuardRejection("functional clt: need at least 2 posterior draws");
  ExperimentReport rep = make_report("functional_clt", seed, cfg.schedule);
  rep.add_param("beta", cfg.beta);
  rep.add_param("alpha", cfg.alpha);
  rep.add_param("m", static_cast<std::int64_t>(cfg.m));
  for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
    const double n = cfg.n_grid[gi];
    const std::int64_t k = truncation_level(cfg.schedule, n);
    const TruncatedPmf theta0 = truncate(cfg.pmf, k);
    const double gamma = std::sqrt(gamma_variance(theta0, cfg.alpha));
    if (!(gamma > 0.0)) throw GuardRejection("functional clt: gamma(theta0) is zero");
    const CountVector counts =
        draw_counts(theta0, as_count(n), derive_seed(seed, {kDataStream, gi}));
    const double g_hat = plug_in_estimate(counts, cfg.alpha);
    const PosteriorDrawSet draws =
        sample_dirichlet(posterior(DirichletDistribution::symmetric(theta0.k(), cfg.beta), counts),
                         cfg.m, derive_seed(seed, {kDrawStream}), threads);
    std::vector<double> z = posterior_functional_draws(draws, cfg.alpha);
    for (double& v : z) v = std::sqrt(n) * (v - g_hat) / gamma;
    rep.add_row({n, k, kNan, std::string("interval_sup_distance"), interval_sup_distance(z), kNan,
                 std::string()});
  }
  finish_trend(rep, "interval_sup_distance");
  return rep;
}

ExperimentReport mle_clt_experiment(const MleCltConfig& cfg, std::uint64_t seed,
                                    unsigned threads) {
  validate(cfg.schedule);
  require_grid(cfg.n_grid);
  if (cfg.R < 10) throw GuardRejection("mle clt: need at least 10 replications");
  const double target = functional_full(cfg.pmf, cfg.alpha);
  const double gamma = std::sqrt(gamma_variance_full(cfg.pmf, cfg.alpha));
  if (!(gamma > 0.0)) throw GuardRejection("mle clt: gamma is zero");
  ExperimentReport rep = make_report("mle_clt", seed, cfg.schedule);
  rep.add_param("alpha", cfg.alpha);
  rep.add_param("R", cfg.R);
  rep.add_param("G_alpha", target);
  rep.add_param("gamma_alpha", gamma);
  std::vector<std::vector<Cell>> extra;
  for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
    const double n = cfg.n_grid[gi];
    const std::int64_t k = truncation_level(cfg.schedule, n);
    const TruncatedPmf theta0 = truncate(cfg.pmf, k);
    std::vector<double> z(static_cast<std::size_t>(cfg.R));
    parallel_for(z.size(), threads, [&](std::size_t r) {
      const CountVector counts =
          draw_counts(theta0, as_count(n), derive_seed(seed, {kDataStream, gi, r}));
      z[r] = std::sqrt(n) * (plug_in_estimate(counts, cfg.alpha) - target) / gamma;
    });
    rep.add_row({n, k, kNan, std::string("kolmogorov_distance"), kolmogorov_distance_normal(z),
                 kNan, std::string()});
    double cubed = 0.0;
    for (std::size_t i = 1; i < theta0.cells(); ++i)
      cubed += theta0[i] * std::pow(std::fabs(g_alpha_prime(theta0[i], cfg.alpha)), 3.0);
    const double tail_bias = functional_tail(cfg.pmf, cfg.alpha, k);
    const double tail_weighted = weighted_functional_tail(cfg.pmf, cfg.alpha, k);
    const double sn = std::sqrt(n);
    const auto add = [&](const char* stat, double v) {
      extra.push_back({n, k, kNan, std::string(stat), v, kNan, std::string()});
    };
    add("k_over_sqrt_n_min_theta0", static_cast<double>(k) / std::sqrt(n * theta0.min_prob()));
    add("third_moment_over_sqrt_n", cubed / sn);
    add("tail_bias", std::fabs(tail_bias));
    add("sqrt_n_tail_bias", sn * std::fabs(tail_bias));
    add("tail_weighted", std::fabs(tail_weighted));
    add("sqrt_n_tail_weighted", sn * std::fabs(tail_weighted));
  }
  finish_trend(rep, "kolmogorov_distance");
  for (auto& row : extra) rep.add_row(std::move(row));
  return rep;
}

ExperimentReport coverage_experiment(const CoverageConfig& cfg, std::uint64_t seed,
                                     unsigned threads) {
  validate(cfg.schedule);
  require_grid(cfg.n_grid);
  if (!(cfg.delta >= 0.0 && cfg.delta < 1.0))
    throw GuardRejection("coverage: delta must lie in [0, 1)");
  if (cfg.R < 2) throw GuardRejection("coverage: need at least 2 replications");
  if (cfg.m < 2) throw GuardRejection("coverage: need at least 2 posterior draws");
  const double target = functional_full(cfg.pmf, cfg.alpha);
  ExperimentReport rep = make_report("coverage", seed, cfg.schedule);
  rep.add_param("beta", cfg.beta);
  rep.add_param("alpha", cfg.alpha);
  rep.add_param("delta", cfg.delta);
  rep.add_param("m", static_cast<std::int64_t>(cfg.m));
  rep.add_param("R", cfg.R);
  rep.add_param("target", target);
  rep.add_param("wald_variance", std::string(cfg.wald_oracle ? "oracle" : "plugin"));
  for (std::size_t gi = 0; gi < cfg.n_grid.size(); ++gi) {
    const double n = cfg.n_grid[gi];
    const std::int64_t k = truncation_level(cfg.schedule, n);
    const TruncatedPmf theta0 = truncate(cfg.pmf, k);
    const DirichletDistribution prior = DirichletDistribution::symmetric(theta0.k(), cfg.beta);
    const std::size_t R = static_cast<std::size_t>(cfg.R);
    std::vector<double> credible(R), wald(R), width_c(R), width_w(R);
    parallel_for(R, threads, [&](std::size_t r) {
      const CountVector counts =
          draw_counts(theta0, as_count(n), derive_seed(seed, {kDataStream, gi, r}));
      const PosteriorDrawSet draws = sample_dirichlet(
          posterior(prior, counts), cfg.m, derive_seed(seed, {kDrawStream, gi, r}));
      const IntervalEstimate ci =
          credible_interval(posterior_functional_draws(draws, cfg.alpha), cfg.delta);
      const IntervalEstimate wi =
          wald_interval(counts, cfg.alpha, cfg.delta,
                        cfg.wald_oracle ? std::optional<TruncatedPmf>(theta0) : std::nullopt);
      credible[r] = ci.contains(target) ? 1.0 : 0.0;
      wald[r] = wi.contains(target) ? 1.0 : 0.0;
      width_c[r] = ci.width();
      width_w[r] = wi.width();
    });
    const auto add = [&](const char* stat, const std::vector<double>& v) {
      double se = 0.0;
      const double mean = mean_se(v, se);
      rep.add_row({n, k, kNan, std::string(stat), mean, se, std::string()});
    };
    add("credible_coverage", credible);
    add("wald_coverage", wald);
    add("credible_width", width_c);
    add("wald_width", width_w);
  }
  rep.verdict = "reported";
  return rep;
}

}  // namespace bvm
