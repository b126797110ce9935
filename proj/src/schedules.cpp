#include "bvm/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "bvm/errors.hpp"

namespace bvm {
namespace {

constexpr double kMaxLevel = 1e18;

std::int64_t floor_clamp(double x) {
  if (!(x >= 1.0)) return 1;
  return static_cast<std::int64_t>(std::floor(std::min(x, kMaxLevel)));
}

void require_n(double n) {
  if (!(n >= 3.0) || !std::isfinite(n)) throw ParameterError("schedule: n must be at least 3");
}

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void add_trend(ConditionReport& r, const std::string& statistic, const std::vector<double>& v) {
  r.verdicts.emplace_back(statistic, to_string(classify_trend(v)));
}

}  // namespace

std::int64_t exp_truncation(double n, double eta, double a) {
  require_n(n);
  if (!(eta > 0.0)) throw ParameterError("exp_truncation: eta must be positive");
  if (!(a > 6.0)) throw ParameterError("exp_truncation: a must exceed 6");
  const double ln = std::log(n);
  return floor_clamp((ln - a * std::log(ln)) / eta);
}

std::int64_t poly_truncation(double n, double eta, double u_n) {
  require_n(n);
  if (!(eta > 1.0)) throw ParameterError("poly_truncation: eta must exceed 1");
  if (!(u_n > 0.0)) throw ParameterError("poly_truncation: u_n must be positive");
  return floor_clamp(std::exp((std::log(n) - std::log(u_n)) / (eta + 3.0)));
}

void validate(const TruncationSchedule& s) {
  std::visit(Overloaded{
                 [](const ExponentialSchedule& e) {
                   if (!(e.eta > 0.0)) throw ParameterError("schedule: eta must be positive");
                   if (!(e.a > 6.0)) throw ParameterError("schedule: a must exceed 6");
                 },
                 [](const PolynomialSchedule& p) {
                   if (!(p.eta > 1.0)) throw ParameterError("schedule: eta must exceed 1");
                   if (!(p.u_power > 3.0))
                     throw ParameterError("schedule: u_n exponent must exceed 3");
                 },
                 [](const ManualSchedule& m) {
                   if (m.steps.empty()) throw ParameterError("schedule: empty step table");
                   for (std::size_t i = 0; i < m.steps.size(); ++i) {
                     if (m.steps[i].second < 1)
                       throw ParameterError("schedule: manual levels must be >= 1");
                     if (i > 0 && !(m.steps[i].first > m.steps[i - 1].first))
                       throw ParameterError("schedule: thresholds must increase");
                   }
                 },
                 [](const PowerSchedule& p) {
                   if (!(p.c > 0.0) || !(p.p >= 0.0))
                     throw ParameterError("schedule: power schedule needs c > 0, p >= 0");
                 },
             },
             s);
}

std::int64_t truncation_level(const TruncationSchedule& s, double n) {
  return std::visit(
      Overloaded{
          [n](const ExponentialSchedule& e) { return exp_truncation(n, e.eta, e.a); },
          [n](const PolynomialSchedule& p) {
            require_n(n);
            return poly_truncation(n, p.eta, std::pow(std::log(n), p.u_power));
          },
          [n](const ManualSchedule& m) {
            if (m.steps.empty()) throw ParameterError("schedule: empty step table");
            std::int64_t k = m.steps.front().second;
            for (const auto& [threshold, level] : m.steps)
              if (threshold <= n) k = level;
            return k;
          },
          [n](const PowerSchedule& p) { return floor_clamp(p.c * std::pow(n, p.p)); },
      },
      s);
}

bool within_sufficient_conditions(const TruncationSchedule& s) noexcept {
  return std::holds_alternative<ExponentialSchedule>(s) ||
         std::holds_alternative<PolynomialSchedule>(s);
}

std::string describe(const TruncationSchedule& s) {
  std::ostringstream out;
  std::visit(Overloaded{
                 [&](const ExponentialSchedule& e) {
                   out << "exponential(eta=" << e.eta << ", a=" << e.a << ")";
                 },
                 [&](const PolynomialSchedule& p) {
                   out << "polynomial(eta=" << p.eta << ", u_n=(ln n)^" << p.u_power << ")";
                 },
                 [&](const ManualSchedule& m) {
                   out << "manual(";
                   for (std::size_t i = 0; i < m.steps.size(); ++i)
                     out << (i ? ";" : "") << m.steps[i].first << ":" << m.steps[i].second;
                   out << ")";
                 },
                 [&](const PowerSchedule& p) { out << "power(c=" << p.c << ", p=" << p.p << ")"; },
             },
             s);
  return out.str();
}

double m_value(const MRule& rule, double n, std::int64_t k, double log_n_min_theta) {
  switch (rule.kind) {
    case MRule::Kind::k_log_n:
      return rule.c * static_cast<double>(k) * std::log(n);
    case MRule::Kind::constant:
      return rule.c;
    case MRule::Kind::cube_root:
      return rule.c * std::exp(log_n_min_theta / 3.0);
    case MRule::Kind::multiple_of_k:
      return rule.c * static_cast<double>(k);
  }
  return rule.c;
}

std::string describe(const MRule& rule) {
  std::ostringstream out;
  switch (rule.kind) {
    case MRule::Kind::k_log_n: out << rule.c << "*k*ln(n)"; break;
    case MRule::Kind::constant: out << rule.c; break;
    case MRule::Kind::cube_root: out << rule.c << "*(n*min theta0)^(1/3)"; break;
    case MRule::Kind::multiple_of_k: out << rule.c << "*k"; break;
  }
  return out.str();
}

double log_min_truncated(const CountablePmf& pmf, std::int64_t k) {
  if (k < 1) throw ParameterError("log_min_truncated: k must be at least 1");
  if (pmf.family() == PmfFamily::explicit_vector) {
    const auto& p = pmf.explicit_probs();
    if (k >= static_cast<std::int64_t>(p.size()))
      return -std::numeric_limits<double>::infinity();
    double m = p[0];
    for (std::int64_t i = 1; i < k; ++i) m = std::min(m, p[i]);
    return std::min(std::log(m), pmf.log_tail(k));
  }
  // Envelope families are decreasing in i.
  return std::min(pmf.log_prob(k), pmf.log_tail(k));
}

double sum_log_truncated(const CountablePmf& pmf, std::int64_t k) {
  if (k < 1) throw ParameterError("sum_log_truncated: k must be at least 1");
  const double dk = static_cast<double>(k);
  const double eta = pmf.eta();
  switch (pmf.family()) {
    case PmfFamily::explicit_vector: {
      double s = pmf.log_tail(k);
      for (std::int64_t i = 1; i <= k; ++i) s += pmf.log_prob(i);
      return s;
    }
    case PmfFamily::exponential_envelope:
      return dk * std::log(-std::expm1(-eta)) - eta * dk * (dk - 1.0) / 2.0 + pmf.log_tail(k);
    case PmfFamily::polynomial_envelope:
      return -eta * std::lgamma(dk + 1.0) + dk * (pmf.log_prob(1)) + pmf.log_tail(k);
  }
  return 0.0;
}

std::string to_string(Trend t) {
  switch (t) {
    case Trend::increasing: return "increasing";
    case Trend::decreasing: return "decreasing";
    case Trend::constant: return "constant";
    case Trend::non_monotone: return "non_monotone";
  }
  return "non_monotone";
}

Trend classify_trend(const std::vector<double>& v) {
  bool inc = true, dec = true, flat = true;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (!(v[i] > v[i - 1])) inc = false;
    if (!(v[i] < v[i - 1])) dec = false;
    if (!(v[i] == v[i - 1])) flat = false;
  }
  if (v.size() < 2) return Trend::constant;
  if (flat) return Trend::constant;
  if (inc) return Trend::increasing;
  if (dec) return Trend::decreasing;
  return Trend::non_monotone;
}

std::vector<double> ConditionReport::series(const std::string& statistic) const {
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.statistic == statistic) out.push_back(r.value);
  return out;
}

std::string ConditionReport::verdict(const std::string& statistic) const {
  for (const auto& [s, v] : verdicts)
    if (s == statistic) return v;
  throw ParameterError("condition report " + name + ": no verdict for " + statistic);
}

ExperimentReport ConditionReport::to_report() const {
  ExperimentReport r;
  r.name = name;
  r.kind = "conditions";
  r.columns = {"n", "statistic", "value"};
  for (const auto& row : rows) r.add_row({row.n, row.statistic, row.value});
  std::string joined;
  for (const auto& [s, v] : verdicts) joined += (joined.empty() ? "" : ";") + s + ":" + v;
  r.verdict = joined;
  r.notes = notes;
  return r;
}

ConditionReport check_condition_2_1(const CountablePmf& pmf, const TruncationSchedule& schedule,
                                    const std::vector<double>& n_grid) {
  validate(schedule);
  ConditionReport r;
  r.name = "condition_2_1";
  std::vector<double> logs;
  for (double n : n_grid) {
    const std::int64_t k = truncation_level(schedule, n);
    const double lv = std::log(n) + log_min_truncated(pmf, k);
    r.rows.push_back({n, "k_n", static_cast<double>(k)});
    r.rows.push_back({n, "n_min_theta0", std::exp(lv)});
    r.rows.push_back({n, "log_n_min_theta0", lv});
    logs.push_back(lv);
  }
  add_trend(r, "n_min_theta0", logs);
  if (!within_sufficient_conditions(schedule))
    r.notes.push_back("schedule " + describe(schedule) + " is outside the sufficient conditions");
  return r;
}

ConditionReport check_condition_3_1(const TruncationSchedule& schedule, const MRule& rule,
                                    const CountablePmf& pmf, const std::vector<double>& n_grid) {
  validate(schedule);
  ConditionReport r;
  r.name = "condition_3_1";
  std::vector<double> first, second;
  for (double n : n_grid) {
    const std::int64_t k = truncation_level(schedule, n);
    const double lv = std::log(n) + log_min_truncated(pmf, k);
    const double M = m_value(rule, n, k, lv);
    if (!(M > 0.0)) throw ParameterError("condition 3.1: M_n must be positive");
    const double r1 = std::exp(std::log(M) - lv / 3.0);
    const double r2 = static_cast<double>(k) / M;
    r.rows.push_back({n, "k_n", static_cast<double>(k)});
    r.rows.push_back({n, "M_n", M});
    r.rows.push_back({n, "M_over_cuberoot_n_min_theta0", r1});
    r.rows.push_back({n, "k_over_M", r2});
    first.push_back(r1);
    second.push_back(r2);
  }
  add_trend(r, "M_over_cuberoot_n_min_theta0", first);
  add_trend(r, "k_over_M", second);
  r.notes.push_back("M_n rule " + describe(rule));
  return r;
}

Condition35Terms condition_3_5_terms(const DirichletDistribution& prior,
                                     const TruncatedPmf& theta0, double M, double n) {
  if (prior.cells() != theta0.cells())
    throw ParameterError("condition 3.5: prior and theta0 dimensions differ");
  if (!(M > 0.0)) throw ParameterError("condition 3.5: M_n must be positive");
  Condition35Terms t;
  t.half_k_log_n = 0.5 * static_cast<double>(theta0.k()) * std::log(n);
  t.log_det_fisher = det_fisher(theta0);
  t.neg_log_prior = -log_density(prior, theta0);
  t.max_term = std::max({t.half_k_log_n, t.log_det_fisher, t.neg_log_prior});
  t.ratio = t.max_term / M;
  return t;
}

ConditionReport check_condition_3_5(double beta, const CountablePmf& pmf,
                                    const TruncationSchedule& schedule, const MRule& rule,
                                    const std::vector<double>& n_grid) {
  validate(schedule);
  if (!(beta > 0.0)) throw ParameterError("condition 3.5: beta must be positive");
  ConditionReport r;
  r.name = "condition_3_5";
  std::vector<double> ratios;
  for (double n : n_grid) {
    const std::int64_t k = truncation_level(schedule, n);
    const double cells = static_cast<double>(k + 1);
    const double sum_log = sum_log_truncated(pmf, k);
    const double lv = std::log(n) + log_min_truncated(pmf, k);
    const double M = m_value(rule, n, k, lv);
    const double half = 0.5 * static_cast<double>(k) * std::log(n);
    const double log_det = -sum_log;
    const double neg_log_w =
        -(std::lgamma(cells * beta) - cells * std::lgamma(beta) + (beta - 1.0) * sum_log);
    const double mx = std::max({half, log_det, neg_log_w});
    r.rows.push_back({n, "k_n", static_cast<double>(k)});
    r.rows.push_back({n, "M_n", M});
    r.rows.push_back({n, "half_k_log_n", half});
    r.rows.push_back({n, "log_det_fisher", log_det});
    r.rows.push_back({n, "neg_log_prior", neg_log_w});
    r.rows.push_back({n, "max_over_M", mx / M});
    ratios.push_back(mx / M);
  }
  add_trend(r, "max_over_M", ratios);
  return r;
}

ConditionReport smoothness_report(double beta, const CountablePmf& pmf,
                                  const TruncationSchedule& schedule, const MRule& rule,
                                  const std::vector<double>& n_grid) {
  validate(schedule);
  if (!(beta > 0.0)) throw ParameterError("smoothness report: beta must be positive");
  ConditionReport r;
  r.name = "condition_3_4_smoothness";
  std::vector<double> logs;
  bool precondition = true;
  const double b2 = (beta - 1.0) * (beta - 1.0);
  for (double n : n_grid) {
    const std::int64_t k = truncation_level(schedule, n);
    const double lv = std::log(n) + log_min_truncated(pmf, k);
    const double M = m_value(rule, n, k, lv);
    const double lb = b2 == 0.0 ? 0.0
                                : 3.0 * std::sqrt(M * static_cast<double>(k + 1) * b2 *
                                                  std::exp(-lv));
    precondition = precondition && 0.5 * (std::log(M) - lv) <= std::log(0.5);
    r.rows.push_back({n, "k_n", static_cast<double>(k)});
    r.rows.push_back({n, "M_n", M});
    r.rows.push_back({n, "ratio_bound", std::exp(lb)});
    r.rows.push_back({n, "log_ratio_bound", lb});
    logs.push_back(lb);
  }
  const Trend t = classify_trend(logs);
  const bool all_one = std::all_of(logs.begin(), logs.end(), [](double x) { return x == 0.0; });
  r.verdicts.emplace_back("ratio_bound",
                          all_one || t == Trend::decreasing ? "to_one" : "not_decreasing");
  if (!precondition)
    r.notes.push_back("sqrt(M/(n min theta0)) <= 1/2 fails on part of the grid");
  return r;
}

}  // namespace bvm
