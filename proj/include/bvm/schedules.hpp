#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "bvm/dirichlet.hpp"
#include "bvm/model.hpp"
#include "bvm/report.hpp"

namespace bvm {

/// max(1, floor((ln n - a ln ln n) / eta)); requires a > 6 and n >= 3.
std::int64_t exp_truncation(double n, double eta, double a);
/// max(1, floor((n / u_n)^(1 / (eta + 3)))).
std::int64_t poly_truncation(double n, double eta, double u_n);

struct ExponentialSchedule {
  double eta = 1.0;
  double a = 6.1;
};

/// u_n = (ln n)^u_power; u_power > 3 keeps u_n / (ln n)^3 unbounded.
struct PolynomialSchedule {
  double eta = 2.0;
  double u_power = 4.0;
};

/// Step table: k_n = k of the last entry whose threshold is <= n (the first
/// entry below every threshold).
struct ManualSchedule {
  std::vector<std::pair<double, std::int64_t>> steps;
};

/// k_n = max(1, floor(c n^p)).
struct PowerSchedule {
  double c = 1.0;
  double p = 1.0;
};

using TruncationSchedule =
    std::variant<ExponentialSchedule, PolynomialSchedule, ManualSchedule, PowerSchedule>;

void validate(const TruncationSchedule& s);
std::int64_t truncation_level(const TruncationSchedule& s, double n);
/// False for manual and power schedules, which are outside the envelope
/// results' sufficient conditions.
bool within_sufficient_conditions(const TruncationSchedule& s) noexcept;
std::string describe(const TruncationSchedule& s);

/// M_n as a function of n, k_n and n min theta0.
struct MRule {
  enum class Kind { k_log_n, constant, cube_root, multiple_of_k };
  Kind kind = Kind::k_log_n;
  double c = 1.0;
};

double m_value(const MRule& rule, double n, std::int64_t k, double log_n_min_theta);
std::string describe(const MRule& rule);

/// log min_{0 <= i <= k} theta0(i) for the truncation of pmf at k, without
/// materializing the truncation (-inf when the tail is empty).
double log_min_truncated(const CountablePmf& pmf, std::int64_t k);
/// sum_{i=0}^k log theta0(i) in closed form for the envelope families.
double sum_log_truncated(const CountablePmf& pmf, std::int64_t k);

enum class Trend { increasing, decreasing, constant, non_monotone };
std::string to_string(Trend t);
/// Strict comparison between successive entries.
Trend classify_trend(const std::vector<double>& values);

struct ConditionRow {
  double n;
  std::string statistic;
  double value;
};

/// Finite-n evidence only; verdicts are trend labels, never "holds".
struct ConditionReport {
  std::string name;
  std::vector<ConditionRow> rows;
  std::vector<std::pair<std::string, std::string>> verdicts;
  std::vector<std::string> notes;

  std::vector<double> series(const std::string& statistic) const;
  std::string verdict(const std::string& statistic) const;
  /// Columns n, statistic, value.
  ExperimentReport to_report() const;
};

ConditionReport check_condition_2_1(const CountablePmf& pmf, const TruncationSchedule& schedule,
                                    const std::vector<double>& n_grid);
ConditionReport check_condition_3_1(const TruncationSchedule& schedule, const MRule& rule,
                                    const CountablePmf& pmf, const std::vector<double>& n_grid);

struct Condition35Terms {
  double half_k_log_n = 0.0;
  double log_det_fisher = 0.0;
  double neg_log_prior = 0.0;
  double max_term = 0.0;
  double ratio = 0.0;  // max_term / M
};
Condition35Terms condition_3_5_terms(const DirichletDistribution& prior,
                                     const TruncatedPmf& theta0, double M, double n);
/// Grid version for a symmetric Dirichlet(beta) prior, closed form in k.
ConditionReport check_condition_3_5(double beta, const CountablePmf& pmf,
                                    const TruncationSchedule& schedule, const MRule& rule,
                                    const std::vector<double>& n_grid);

/// Smoothness bound over the grid; verdict "to_one" when identically 1 or
/// strictly decreasing, otherwise "not_decreasing".
ConditionReport smoothness_report(double beta, const CountablePmf& pmf,
                                  const TruncationSchedule& schedule, const MRule& rule,
                                  const std::vector<double>& n_grid);

}  // namespace bvm
