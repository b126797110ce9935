#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "bvm/parallel.hpp"
#include "bvm/runner.hpp"

namespace {

std::optional<unsigned> threads_from_env() {
  const char* v = std::getenv("BVM_THREADS");
  if (!v || !*v) return std::nullopt;
  char* end = nullptr;
  const unsigned long t = std::strtoul(v, &end, 10);
  if (*end != '\0') throw bvm::ConfigError("BVM_THREADS", "expected a non-negative integer");
  return static_cast<unsigned>(t);
}

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
};

void add_common(CLI::App* cmd, CommonFlags& f, bool config_required) {
  auto* c = cmd->add_option("--config", f.config, "Experiment configuration file");
  if (config_required) c->required();
  cmd->add_option("--seed", f.seed, "Root seed (overrides [run] seed)");
  cmd->add_option("--out", f.out, "Output directory (overrides [run] out)");
  cmd->add_option("--threads", f.threads, "Worker threads, 0 = auto");
}

void apply(bvm::RunConfig& cfg, const CommonFlags& f) {
  if (f.seed) cfg.seed = *f.seed;
  if (f.out) cfg.out = *f.out;
  if (f.threads) cfg.threads = *f.threads;
  else if (auto t = threads_from_env()) cfg.threads = *t;
  cfg.threads = bvm::resolve_threads(cfg.threads);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Truncated multinomial Bernstein-von Mises experiments"};
  app.require_subcommand(1);

  CommonFlags run_flags;
  auto* run = app.add_subcommand("run", "Run every experiment in a config file");
  add_common(run, run_flags, true);

  CommonFlags bound_flags;
  auto* bounds = app.add_subcommand("verify-bounds", "Check tail bounds by simulation");
  add_common(bounds, bound_flags, false);
  bvm::BoundsJob job;
  std::string bound_kind = "chi-square";
  bounds->add_option("--bound", bound_kind, "chi-square | pearson-centered | pearson-noncentered");
  bounds->add_option("--k", job.k, "Truncation level");
  bounds->add_option("--level", job.level, "x for the centered bounds, M for the non-centered");
  bounds->add_option("--n-theta-min", job.n_theta_min, "n times the smallest cell");
  bounds->add_option("--theta-small", job.theta_small, "Smallest cell of the reference pmf");
  bounds->add_option("--R", job.R, "Replications");

  CommonFlags cond_flags;
  auto* conditions = app.add_subcommand("check-conditions", "Tabulate finite-n condition checks");
  add_common(conditions, cond_flags, true);

  std::string counts_path;
  bvm::EstimateOptions est;
  std::int64_t k_opt = 0;
  auto* estimate = app.add_subcommand("estimate", "Entropy estimates from a counts file");
  estimate->add_option("counts", counts_path, "One count per line for cells 1..k")->required();
  estimate->add_option("--alpha", est.alpha, "Functional order (1 = Shannon)");
  estimate->add_option("--delta", est.delta, "1 - interval level");
  estimate->add_option("--beta", est.beta, "Symmetric Dirichlet prior parameter");
  estimate->add_option("--k", k_opt, "Truncation level (defaults to the number of lines)");
  estimate->add_option("--tail", est.tail, "Count of symbols beyond k (cell 0)");
  estimate->add_option("--m", est.m, "Posterior draws");
  estimate->add_option("--seed", est.seed, "Seed for posterior draws");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bvm::kExitConfig;
  }

  if (*run) {
    return bvm::guarded(std::cerr, [&] {
      bvm::RunConfig cfg = bvm::load_config(run_flags.config);
      apply(cfg, run_flags);
      bvm::run_experiments(cfg, std::cout);
    });
  }
  if (*conditions) {
    return bvm::guarded(std::cerr, [&] {
      bvm::RunConfig cfg = bvm::load_config(cond_flags.config);
      apply(cfg, cond_flags);
      bvm::run_experiments(cfg, std::cout, std::string("check-conditions"));
    });
  }
  if (*bounds) {
    return bvm::guarded(std::cerr, [&] {
      if (!bound_flags.config.empty()) {
        bvm::RunConfig cfg = bvm::load_config(bound_flags.config);
        apply(cfg, bound_flags);
        bvm::run_experiments(cfg, std::cout, std::string("verify-bounds"));
        return;
      }
      if (bound_kind == "chi-square") job.kind = bvm::TailKind::chi_square;
      else if (bound_kind == "pearson-centered") job.kind = bvm::TailKind::pearson_centered;
      else if (bound_kind == "pearson-noncentered") job.kind = bvm::TailKind::pearson_noncentered;
      else throw bvm::ConfigError("--bound", "unknown bound '" + bound_kind + "'");
      bvm::RunConfig cfg;
      cfg.experiments.push_back({"verify_bounds", "verify-bounds", job});
      apply(cfg, bound_flags);
      bvm::preflight(cfg.experiments.front());
      const bvm::ExperimentReport rep =
          bvm::run_entry(cfg.experiments.front(), cfg.seed, cfg.threads);
      if (bound_flags.out) bvm::write_report(cfg.out, rep);
      std::cout << rep.to_csv(false);
    });
  }
  return bvm::guarded(std::cerr, [&] {
    if (k_opt > 0) est.k = k_opt;
    std::cout << bvm::estimate(bvm::read_counts_file(counts_path), est).dump(2) << '\n';
  });
}
