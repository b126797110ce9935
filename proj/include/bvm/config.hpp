#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "bvm/bounds.hpp"
#include "bvm/harness.hpp"
#include "bvm/model.hpp"
#include "bvm/schedules.hpp"

namespace bvm {

/// One verify-bounds job against a spiked theta0 (one cell theta_small, the
/// rest uniform) with n = n_theta_min / theta_small.
struct BoundsJob {
  TailKind kind = TailKind::chi_square;
  std::int64_t k = 10;
  double level = 2.0;
  double n_theta_min = 100.0;
  double theta_small = 0.01;
  std::int64_t R = 10000;
};

/// Builds the spec and sampling setup for a job.
std::pair<TailBoundSpec, SamplingConfig> prepare_bounds_job(const BoundsJob& job);

enum class ConditionKind { c2_1, c3_1, c3_5, smoothness };

struct ConditionsJob {
  ConditionKind condition = ConditionKind::c2_1;
  CountablePmf pmf;
  TruncationSchedule schedule;
  MRule m_rule;
  double beta = 1.0;
  std::vector<double> n_grid;
};

ConditionReport run_conditions_job(const ConditionsJob& job);

using ExperimentJob = std::variant<BoundsJob, ConcentrationConfig, TvConfig, FunctionalCltConfig,
                                   MleCltConfig, CoverageConfig, ConditionsJob>;

struct ExperimentEntry {
  std::string name;
  std::string kind;
  ExperimentJob job;
};

struct RunConfig {
  std::uint64_t seed = 0;
  std::filesystem::path out = "results";
  unsigned threads = 1;
  std::vector<ExperimentEntry> experiments;
};

/// Sectioned key = value text. Sections: [run], [source], [schedule],
/// [prior] and any number of [experiment NAME]. '#' starts a comment.
/// Every error is a ConfigError naming "section.key" (or the line).
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Guard checks that reject degenerate experiments before anything runs.
void preflight(const ExperimentEntry& e);

}  // namespace bvm
