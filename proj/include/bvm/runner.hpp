#pragma once

#include <cstdint>
#include <exception>
#include <filesystem>
#include <ostream>
#include <optional>
#include <string>
#include <vector>

#include "bvm/config.hpp"
#include "bvm/errors.hpp"
#include "bvm/report.hpp"

namespace bvm {

enum ExitCode : int { kExitOk = 0, kExitFailure = 1, kExitConfig = 2, kExitGuard = 3 };

struct RunOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::filesystem::path> out;
  std::optional<unsigned> threads;
};

/// Seed of one experiment: derived from the root seed and the experiment name.
std::uint64_t experiment_seed(std::uint64_t root, const std::string& name) noexcept;

ExperimentReport run_entry(const ExperimentEntry& entry, std::uint64_t seed, unsigned threads);

/// Preflights every selected experiment, then runs them and writes NAME.csv /
/// NAME.json under the output directory. `only_kind` restricts to one kind.
void run_experiments(const RunConfig& cfg, std::ostream& log,
                     const std::optional<std::string>& only_kind = std::nullopt);

/// Maps library exceptions to exit codes, printing the message to `err`.
template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    fn();
    return kExitOk;
  } catch (const GuardRejection& e) {
    err << "rejected: " << e.what() << '\n';
    return kExitGuard;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const InputError& e) {
    err << "input error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ParameterError& e) {
    err << "parameter error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "domain error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
}


/// One non-negative integer per line for cells 1..k; blank lines are skipped.
std::vector<std::int64_t> read_counts_file(const std::filesystem::path& path);

struct EstimateOptions {
  double alpha = 1.0;
  double delta = 0.1;
  double beta = 1.0;
  std::int64_t tail = 0;
  std::optional<std::int64_t> k;
  std::size_t m = 4000;
  std::uint64_t seed = 0;
};

nlohmann::json estimate(const std::vector<std::int64_t>& cells, const EstimateOptions& opt);

}  // namespace bvm
