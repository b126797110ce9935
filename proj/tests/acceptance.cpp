// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "bvm/bounds.hpp"
#include "bvm/config.hpp"
#include "bvm/dirichlet.hpp"
#include "bvm/functionals.hpp"
#include "bvm/harness.hpp"
#include "bvm/model.hpp"
#include "bvm/parallel.hpp"
#include "bvm/report.hpp"
#include "bvm/runner.hpp"
#include "bvm/special.hpp"
#include "oracles.hpp"

using namespace bvm;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

unsigned threads() { return resolve_threads(0); }

CountablePmf geometric() { return CountablePmf::exponential(std::numbers::ln2); }

TruncationSchedule fixed_k(std::int64_t k) { return ManualSchedule{{{1, k}}}; }

// Largest k whose smallest truncated cell still has n theta0 >= 1.
std::int64_t observable_k(double n) {
  std::int64_t k = 1;
  while (n * truncate(geometric(), k + 1).min_prob() >= 1.0) ++k;
  return k;
}

// Seeds follow the runner: root seed plus the experiment name.
std::uint64_t seed_for(std::uint64_t root, const char* name) { return experiment_seed(root, name); }

const std::vector<double> kGrid{1e3, 1e4, 1e5};

// Rows of `rep` whose statistic column equals `stat`, in grid order.
std::vector<double> series(const ExperimentReport& rep, const std::string& stat) {
  std::vector<double> out;
  const std::size_t s = rep.column("statistic");
  for (std::size_t r = 0; r < rep.rows.size(); ++r)
    if (std::get<std::string>(rep.rows[r][s]) == stat) out.push_back(rep.number(r, "value"));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : "/") + fmt("%.4g", x);
  return s;
}

Outcome ac1() {
  Rng rng(101);
  double worst_id = 0.0, worst_det = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const std::size_t k = 1 + rng.next_u64() % 100;
    const TruncatedPmf theta(oracle::random_simplex(k + 1, rng, 1e-4));
    std::vector<double> v(k);
    for (auto& x : v) x = rng.normal();
    const auto back = fisher_inverse_apply(theta, fisher_apply(theta, v));
    for (std::size_t i = 0; i < k; ++i) worst_id = std::max(worst_id, oracle::rel_err(back[i], v[i]));
    if (k <= 8) {
      std::vector<double> p(theta.probs().begin(), theta.probs().end());
      worst_det = std::max(worst_det, oracle::rel_err(det_fisher(theta),
                                                      oracle::log_abs_det(oracle::dense_fisher(p))));
    }
  }
  return {worst_id < 1e-9 && worst_det < 1e-8,
          "identity " + fmt("%.2e", worst_id) + ", log det " + fmt("%.2e", worst_det)};
}

Outcome ac2() {
  Rng rng(102);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t k = 1 + rng.next_u64() % 30;
    const TruncatedPmf theta(oracle::random_simplex(k + 1, rng, 1e-3));
    const std::int64_t n = 1 + static_cast<std::int64_t>(rng.next_u64() % 5000);
    const CountVector counts(multinomial(n, oracle::random_simplex(k + 1, rng), rng));
    const auto d = delta_n(theta, counts);
    const auto id = fisher_apply(theta, d);
    double q = 0.0;
    for (std::size_t i = 0; i < k; ++i) q += d[i] * id[i];
    worst = std::max(worst, oracle::rel_err(pearson_statistic(theta, counts), q));
  }
  return {worst < 1e-10, "max rel err " + fmt("%.2e", worst)};
}

Outcome ac3() {
  Rng rng(103);
  double worst = 0.0;
  for (int rep = 0; rep < 1000; ++rep) {
    const std::size_t k = 1 + rng.next_u64() % 20;
    const TruncatedPmf theta0(oracle::random_simplex(k + 1, rng, 1e-3));
    const std::int64_t n = 10 + static_cast<std::int64_t>(rng.next_u64() % 100000);
    std::vector<double> h(k + 1);
    double mean = 0.0;
    for (auto& x : h) {
      x = rng.normal();
      mean += x;
    }
    mean /= static_cast<double>(k + 1);
    double ratio = 0.0;
    for (std::size_t i = 0; i <= k; ++i) {
      h[i] -= mean;
      ratio = std::max(ratio, std::abs(h[i]) / theta0[i]);
    }
    const double scale = rng.uniform() * 0.9 * std::sqrt(static_cast<double>(n)) / ratio;
    for (auto& x : h) x *= scale;
    const CountVector counts(multinomial(n, theta0.probs(), rng));
    const auto dec = taylor_decompose(Perturbation(h, theta0, n), counts);
    const double rhs = dec.z - dec.sigma_sq / 2 + dec.a / 2 + dec.c;
    worst = std::max(worst, oracle::rel_err(rhs, dec.log_ratio));
  }
  return {worst < 1e-9, "max rel err " + fmt("%.2e", worst)};
}

Outcome ac4() {
  Rng rng(104);
  int good = 0;
  const std::size_t m = 10000;
  const double crit = two_sample_ks_critical(m, m, 0.01);
  double worst = 0.0;
  for (int cfg = 0; cfg < 20; ++cfg) {
    const std::int64_t k = 1 + static_cast<std::int64_t>(rng.next_u64() % 3);
    const std::int64_t n = 1 + static_cast<std::int64_t>(rng.next_u64() % 500);
    const double beta = 0.25 + 2.75 * rng.uniform();
    // Symbols 1..k+2 so that cell 0 collects a real tail.
    std::vector<double> w(static_cast<std::size_t>(k + 2));
    for (auto& x : w) x = rng.exponential();
    AliasTable table(w);
    std::vector<std::int64_t> sample(static_cast<std::size_t>(n));
    for (auto& s : sample) s = static_cast<std::int64_t>(table.draw(rng)) + 1;
    const std::uint64_t seed = rng.next_u64();
    const auto stream = sample_posterior_streamwise(beta, sample, k, m, seed);
    const auto post = posterior(DirichletDistribution::symmetric(k, beta), tally(sample, k));
    const auto direct = sample_dirichlet(post, m, seed ^ 0x9e3779b97f4a7c15ULL);
    bool ok = true;
    for (std::size_t j = 0; j < post.cells(); ++j) {
      const double d = two_sample_ks(stream.column(j), direct.column(j));
      worst = std::max(worst, d);
      ok = ok && d < crit;
    }
    good += ok;
  }
  return {good >= 19, std::to_string(good) + "/20 configs, max KS " + fmt("%.4f", worst) +
                          " vs " + fmt("%.4f", crit)};
}

Outcome ac5() {
  int settings = 0, passed = 0, oracle_ok = 0, oracle_runs = 0;
  const TailKind kinds[] = {TailKind::chi_square, TailKind::pearson_centered,
                            TailKind::pearson_noncentered};
  std::uint64_t tag = 0;
  for (TailKind kind : kinds) {
    const std::vector<double> levels = kind == TailKind::pearson_noncentered
                                           ? std::vector<double>{96, 192, 384}
                                           : std::vector<double>{0.5, 2, 4};
    for (std::int64_t k : {5, 20})
      for (double level : levels)
        for (double ntm : {50.0, 500.0}) {
          BoundsJob job{kind, k, level, ntm, 0.01, 10000};
          const auto [spec, sampling] = prepare_bounds_job(job);
          bool all = true;
          for (std::uint64_t seed = 1; seed <= 5; ++seed) {
            const auto res =
                estimate_exceedance(spec, sampling, job.R, derive_seed(seed, {tag}), threads());
            all = all && res.pass;
            if (res.oracle_agrees) {
              ++oracle_runs;
              oracle_ok += *res.oracle_agrees;
            }
          }
          ++tag;
          ++settings;
          passed += all;
        }
  }
  return {passed == settings && oracle_ok == oracle_runs,
          std::to_string(passed) + "/" + std::to_string(settings) + " settings, chi-square oracle " +
              std::to_string(oracle_ok) + "/" + std::to_string(oracle_runs)};
}

Outcome ac6() {
  ConcentrationConfig c{geometric(), ManualSchedule{{{1000, 3}, {10000, 4}, {100000, 5}}},
                        MRule{MRule::Kind::multiple_of_k, 10.0}, 1.0, kGrid, 2000, 50};
  int dec = 0;
  std::string first;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto v =
        series(concentration_experiment(c, seed_for(seed, "conc"), threads()), "outside_fraction");
    dec += classify_trend(v) == Trend::decreasing;
    if (seed == 1) first = join(v);
  }
  return {dec >= 8, std::to_string(dec) + "/10 seeds decreasing, seed 1: " + first};
}

Outcome ac7() {
  // Calibration: Dirichlet(500, 500) is the beta = 1 posterior at n = 998 with
  // counts (499, 499), against N(0, 1/4) in h = sqrt(n)(tau - 1/2).
  const TruncatedPmf t0({0.5, 0.5});
  const std::int64_t n = 998;
  const CountVector counts({499, 499});
  const auto post = posterior(DirichletDistribution::symmetric(1, 1.0), counts);
  const auto gl = GaussianLimit::at(t0, counts);
  const LogDensity log_p = [&](std::span<const double> h) {
    return posterior_h_log_density(post, t0, n, h);
  };
  const auto est = tv_estimate(log_p, gl, 200000, 7, threads());
  const double half = 0.5 * std::sqrt(static_cast<double>(n));
  const double oracle_tv = 0.5 * oracle::simpson(
                                     [&](double x) {
                                       std::vector<double> h{x};
                                       const double p = std::exp(log_p(h));
                                       return std::abs(p - std::exp(gaussian_log_density(gl, h)));
                                     },
                                     -half, half, 200000);
  const bool calib = std::abs(est.value - oracle_tv) <= 3 * est.std_error && est.value < 0.1;

  TvConfig t{geometric(), fixed_k(3), 1.0, kGrid, 20000};
  int dec = 0;
  std::string first;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto v = series(tv_experiment(t, seed_for(seed, "tv"), threads()), "tv");
    dec += classify_trend(v) == Trend::decreasing;
    if (seed == 1) first = join(v);
  }
  return {calib && dec >= 8, "calibration " + fmt("%.5f", est.value) + " +- " +
                                 fmt("%.5f", est.std_error) + " vs oracle " +
                                 fmt("%.5f", oracle_tv) + ", " + std::to_string(dec) +
                                 "/10 seeds decreasing, seed 1: " + first};
}

Outcome ac8() {
  const std::int64_t k = observable_k(kGrid.front());
  FunctionalCltConfig f{geometric(), fixed_k(k), 1.0, 1.0, kGrid, 5000};
  int dec = 0;
  double worst_last = 0.0;
  std::string first;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto v = series(functional_clt_experiment(f, seed_for(seed, "fclt"), threads()),
                          "interval_sup_distance");
    dec += classify_trend(v) == Trend::decreasing;
    worst_last = std::max(worst_last, v.back());
    if (seed == 1) first = join(v);
  }
  return {dec >= 8 && worst_last < 0.1,
          "k=" + std::to_string(k) + ", " + std::to_string(dec) +
              "/10 seeds decreasing, max at 1e5 " + fmt("%.4f", worst_last) + ", seed 1: " + first};
}

Outcome ac9() {
  const double n = 1e5;
  // Smallest k whose sqrt(n) |tail bias| is below 1e-4.
  std::int64_t k = 1;
  while (std::sqrt(n) * std::abs(functional_tail(geometric(), 1.0, k)) >= 1e-4) ++k;
  MleCltConfig m{geometric(), fixed_k(k), 1.0, {n}, 1000};
  const auto rep = mle_clt_experiment(m, seed_for(1, "mle"), threads());
  const double ks = series(rep, "kolmogorov_distance").front();
  const double tail = series(rep, "sqrt_n_tail_bias").front();
  return {ks < 0.05 && tail < 1e-4, "k=" + std::to_string(k) + ", sqrt(n) tail bias " +
                                          fmt("%.2e", tail) + ", KS " + fmt("%.4f", ks)};
}

Outcome ac10() {
  const std::int64_t k = observable_k(1e4);
  CoverageConfig c{geometric(), fixed_k(k), 1.0, 1.0, 0.1, {1e4}, 3000, 500};
  const auto rep = coverage_experiment(c, seed_for(1, "cov"), threads());
  const double cred = series(rep, "credible_coverage").front();
  const double wald = series(rep, "wald_coverage").front();
  const auto in_band = [](double v) { return v >= 0.85 && v <= 0.95; };
  return {in_band(cred) && in_band(wald), "k=" + std::to_string(k) + ", credible " +
                                              fmt("%.3f", cred) + ", Wald " + fmt("%.3f", wald)};
}

Outcome ac11() {
  double worst = 0.0;
  for (std::size_t cells : {2u, 3u, 7u, 50u}) {
    std::vector<double> p(cells + 1, 1.0 / static_cast<double>(cells));
    p[0] = 0.0;
    const TruncatedPmf u(p);
    worst = std::max(worst, std::abs(gamma_variance(u, 1.0)));
    worst = std::max(worst, std::abs(shannon_entropy(u) - std::log(static_cast<double>(cells))));
    const TruncatedPmf all(std::vector<double>(cells, 1.0 / static_cast<double>(cells)));
    worst = std::max(worst, std::abs(smoothness_ratio_bound(1.0, all, 5.0, 1000).value - 1.0));
  }
  return {worst <= 1e-12, "max deviation " + fmt("%.2e", worst)};
}

std::string csv_body(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  const std::string s = ss.str();
  return s.substr(s.find('\n') + 1);
}

Outcome ac12() {
  const std::string text = R"(
[source]
family = exponential
eta = 0.6931471805599453
[schedule]
kind = manual
steps = 1000:3, 10000:4
[experiment conc]
kind = concentration
n_grid = 1000, 10000
m_rule = multiple_of_k
m_c = 10
m = 500
R = 10
[experiment tv]
kind = tv
n_grid = 1000, 10000
m = 2000
[experiment fclt]
kind = functional-clt
n_grid = 1000, 10000
m = 1000
[experiment mle]
kind = mle-clt
n_grid = 1000
R = 200
[experiment cov]
kind = coverage
n_grid = 1000
m = 300
R = 20
[experiment chi]
kind = verify-bounds
bound = pearson-centered
k = 5
x = 2
R = 2000
[experiment cond]
kind = check-conditions
condition = 3.5
n_grid = 1000, 10000
)";
  const auto dir = std::filesystem::temp_directory_path() / "bvm_acceptance_ac12";
  std::filesystem::remove_all(dir);
  int identical = 0, total = 0;
  RunConfig cfg = parse_config(text);
  cfg.seed = 12;
  std::ostringstream log;
  cfg.out = dir / "a";
  cfg.threads = 1;
  run_experiments(cfg, log);
  cfg.out = dir / "b";
  cfg.threads = 4;
  run_experiments(cfg, log);
  for (const auto& e : cfg.experiments) {
    ++total;
    identical += csv_body(dir / "a" / (e.name + ".csv")) == csv_body(dir / "b" / (e.name + ".csv"));
  }
  std::filesystem::remove_all(dir);
  return {identical == total,
          std::to_string(identical) + "/" + std::to_string(total) + " experiments byte-identical"};
}

}  // namespace

int main() {
  struct Criterion {
    const char* id;
    Outcome (*run)();
    double budget_s;
  };
  const Criterion all[] = {{"AC1", ac1, 1},    {"AC2", ac2, 1},      {"AC3", ac3, 1},
                           {"AC4", ac4, 30},   {"AC5", ac5, 300},    {"AC6", ac6, 300},
                           {"AC7", ac7, 600},  {"AC8", ac8, 600},    {"AC9", ac9, 600},
                           {"AC10", ac10, 600}, {"AC11", ac11, 1e9}, {"AC12", ac12, 1e9}};
  int failures = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool pass = o.pass && secs < c.budget_s;
    failures += !pass;
    std::printf("%s %s %s (%.2f s)\n", c.id, pass ? "PASS" : "FAIL", o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
