#include "bvm/runner.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

#include "bvm/functionals.hpp"

namespace bvm {

std::uint64_t experiment_seed(std::uint64_t root, const std::string& name) noexcept {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
  for (unsigned char c : name) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return derive_seed(root, {h});
}

ExperimentReport run_entry(const ExperimentEntry& entry, std::uint64_t seed, unsigned threads) {
  ExperimentReport rep = std::visit(
      [&](const auto& job) -> ExperimentReport {
        using T = std::decay_t<decltype(job)>;
        if constexpr (std::is_same_v<T, ConcentrationConfig>)
          return concentration_experiment(job, seed, threads);
        else if constexpr (std::is_same_v<T, TvConfig>)
          return tv_experiment(job, seed, threads);
        else if constexpr (std::is_same_v<T, FunctionalCltConfig>)
          return functional_clt_experiment(job, seed, threads);
        else if constexpr (std::is_same_v<T, MleCltConfig>)
          return mle_clt_experiment(job, seed, threads);
        else if constexpr (std::is_same_v<T, CoverageConfig>)
          return coverage_experiment(job, seed, threads);
        else if constexpr (std::is_same_v<T, BoundsJob>) {
          const auto [spec, sampling] = prepare_bounds_job(job);
          ExperimentReport r = verify_exceedance(spec, sampling, job.R, seed, threads);
          r.add_param("n_theta_min", job.n_theta_min);
          r.add_param("theta_small", job.theta_small);
          return r;
        } else {
          return run_conditions_job(job).to_report();
        }
      },
      entry.job);
  rep.name = entry.name;
  rep.kind = entry.kind;
  return rep;
}

void run_experiments(const RunConfig& cfg, std::ostream& log,
                     const std::optional<std::string>& only_kind) {
  std::vector<const ExperimentEntry*> selected;
  for (const auto& e : cfg.experiments)
    if (!only_kind || e.kind == *only_kind) selected.push_back(&e);
  if (selected.empty())
    throw ConfigError("experiment", "no experiment of kind " + only_kind.value_or("any"));
  for (const auto* e : selected) preflight(*e);
  for (const auto* e : selected) {
    const ExperimentReport rep = run_entry(*e, experiment_seed(cfg.seed, e->name), cfg.threads);
    write_report(cfg.out, rep);
    log << e->name << " (" << e->kind << "): " << (rep.verdict.empty() ? "done" : rep.verdict)
        << " -> " << (cfg.out / (e->name + ".csv")).string() << '\n';
  }
}

std::vector<std::int64_t> read_counts_file(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw InputError(path.string() + ": cannot read counts file");
  std::vector<std::int64_t> out;
  std::string line;
  int line_no = 0;
  while (std::getline(f, line)) {
    ++line_no;
    const auto b = line.find_first_not_of(" \t\r");
    if (b == std::string::npos) continue;
    const auto e = line.find_last_not_of(" \t\r");
    const std::string t = line.substr(b, e - b + 1);
    std::int64_t v = 0;
    const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
    if (res.ec != std::errc() || res.ptr != t.data() + t.size() || v < 0)
      throw InputError(path.string() + ":" + std::to_string(line_no) +
                       ": expected a non-negative integer, got '" + t + "'");
    out.push_back(v);
  }
  if (out.empty()) throw InputError(path.string() + ": counts file has no counts");
  return out;
}

nlohmann::json estimate(const std::vector<std::int64_t>& cells, const EstimateOptions& opt) {
  if (cells.empty()) throw InputError("estimate: no counts");
  if (opt.tail < 0) throw InputError("estimate: tail count must be non-negative");
  std::size_t k = cells.size();
  if (opt.k) {
    if (*opt.k < static_cast<std::int64_t>(cells.size()))
      throw InputError("estimate: counts file has more than k cells");
    k = static_cast<std::size_t>(*opt.k);
  }
  std::vector<std::int64_t> counts(k + 1, 0);
  counts[0] = opt.tail;
  std::copy(cells.begin(), cells.end(), counts.begin() + 1);
  const CountVector cv(std::move(counts));
  if (cv.n() == 0) throw InputError("estimate: all counts are zero");

  const DirichletDistribution post =
      posterior(DirichletDistribution::symmetric(k, opt.beta), cv);
  const PosteriorDrawSet draws = sample_dirichlet(post, opt.m, opt.seed);
  const std::vector<double> values = posterior_functional_draws(draws, opt.alpha);
  const double mean =
      std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  const IntervalEstimate ci = credible_interval(values, opt.delta);
  const IntervalEstimate wi = wald_interval(cv, opt.alpha, opt.delta);
  const TruncatedPmf theta_hat = mle(cv);

  nlohmann::json j;
  j["k"] = k;
  j["n"] = cv.n();
  j["alpha"] = opt.alpha;
  j["delta"] = opt.delta;
  j["beta"] = opt.beta;
  j["m"] = opt.m;
  j["seed"] = opt.seed;
  j["plug_in"] = functional_truncated(theta_hat, opt.alpha);
  j["entropy"] =
      opt.alpha == 1.0 ? shannon_entropy(theta_hat) : renyi_entropy(theta_hat, opt.alpha);
  j["posterior_mean"] = mean;
  j["credible"] = {{"lower", ci.lower}, {"upper", ci.upper}, {"level", ci.level}};
  j["wald"] = {{"lower", wi.lower}, {"upper", wi.upper}, {"level", wi.level}};
  nlohmann::json warnings = nlohmann::json::array();
  if (wi.warning) {
    const PluginVariance v = gamma_variance_plugin(theta_hat, opt.alpha);
    if (v.value == 0.0) warnings.push_back("plug-in gamma is zero; Wald interval is degenerate");
    if (v.skipped_cells > 0)
      warnings.push_back(std::to_string(v.skipped_cells) + " empty cells skipped in gamma");
  }
  j["warnings"] = warnings;
  return j;
}

}  // namespace bvm
