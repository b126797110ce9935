#include <cmath>
#include <numbers>
#include <vector>

#include "bvm/dirichlet.hpp"
#include "bvm/errors.hpp"
#include "bvm/schedules.hpp"
#include "doctest.h"

using namespace bvm;
using doctest::Approx;

TEST_CASE("exponential truncation") {
  CHECK(exp_truncation(1e6, 1.0, 6.1) == 1);
  CHECK(exp_truncation(1e30, 1.0, 6.1) == 43);
  CHECK(exp_truncation(1e30, 1e9, 6.1) == 1);
  CHECK_THROWS_AS(exp_truncation(1e6, 1.0, 6.0), ParameterError);
  CHECK_THROWS_AS(exp_truncation(2.0, 1.0, 6.1), ParameterError);
}

TEST_CASE("polynomial truncation") {
  CHECK(poly_truncation(1e6, 2.0, std::pow(std::log(1e6), 4)) == 1);
  CHECK(poly_truncation(1e12, 2.0, std::pow(std::log(1e12), 4)) == 17);
  CHECK(poly_truncation(1e9, 2.0, 1e9) == 1);
  CHECK_THROWS_AS(poly_truncation(1e6, 1.0, 10.0), ParameterError);
}

TEST_CASE("schedule variants") {
  TruncationSchedule e = ExponentialSchedule{1.0, 6.1};
  TruncationSchedule p = PolynomialSchedule{2.0, 4.0};
  TruncationSchedule m = ManualSchedule{{{1000, 3}, {10000, 4}, {100000, 5}}};
  TruncationSchedule w = PowerSchedule{1.0, 1.0};
  CHECK(truncation_level(e, 1e30) == 43);
  CHECK(truncation_level(p, 1e12) == 17);
  CHECK(truncation_level(m, 500) == 3);
  CHECK(truncation_level(m, 1e4) == 4);
  CHECK(truncation_level(m, 5e4) == 4);
  CHECK(truncation_level(m, 1e7) == 5);
  CHECK(truncation_level(w, 37) == 37);
  CHECK(within_sufficient_conditions(e));
  CHECK(within_sufficient_conditions(p));
  CHECK_FALSE(within_sufficient_conditions(m));
  CHECK_FALSE(within_sufficient_conditions(w));
  CHECK_THROWS_AS(validate(TruncationSchedule{ExponentialSchedule{1.0, 5.0}}), ParameterError);
  CHECK_THROWS_AS(validate(TruncationSchedule{PolynomialSchedule{2.0, 3.0}}), ParameterError);
  CHECK_THROWS_AS(validate(TruncationSchedule{ManualSchedule{{{10, 2}, {5, 3}}}}), ParameterError);
  CHECK(describe(m) == "manual(1000:3;10000:4;100000:5)");
}

TEST_CASE("property: schedules clamp and are monotone") {
  std::vector<TruncationSchedule> all{ExponentialSchedule{0.5, 6.1}, ExponentialSchedule{2.0, 8.0},
                                      PolynomialSchedule{1.5, 4.0}, PolynomialSchedule{3.0, 5.0}};
  for (const auto& s : all) {
    std::int64_t prev = 0;
    for (double n = 3; n < 1e40; n *= 1.7) {
      const std::int64_t k = truncation_level(s, n);
      CHECK(k >= 1);
      if (n >= 1e3) {
        CHECK(k >= prev);
        prev = k;
      }
    }
  }
}

TEST_CASE("closed-form truncated sums") {
  auto geo = CountablePmf::exponential(0.9);
  auto poly = CountablePmf::polynomial(2.3);
  for (std::int64_t k : {1, 3, 12}) {
    for (const auto* pmf : {&geo, &poly}) {
      auto t = truncate(*pmf, k);
      double s = 0.0, mn = 1.0;
      for (double x : t.probs()) {
        s += std::log(x);
        mn = std::min(mn, x);
      }
      CHECK(sum_log_truncated(*pmf, k) == Approx(s).epsilon(1e-12));
      CHECK(log_min_truncated(*pmf, k) == Approx(std::log(mn)).epsilon(1e-12));
    }
  }
  auto ex = CountablePmf::explicit_pmf({0.5, 0.1, 0.4});
  CHECK(log_min_truncated(ex, 2) == Approx(std::log(0.1)));
  CHECK(std::isinf(log_min_truncated(ex, 3)));
}

TEST_CASE("trend classification") {
  CHECK(classify_trend({1, 2, 3}) == Trend::increasing);
  CHECK(classify_trend({3, 2, 1}) == Trend::decreasing);
  CHECK(classify_trend({1, 1, 1}) == Trend::constant);
  CHECK(classify_trend({1, 2, 2}) == Trend::non_monotone);
  CHECK(classify_trend({1, 3, 2}) == Trend::non_monotone);
  CHECK(to_string(Trend::non_monotone) == "non_monotone");
}

TEST_CASE("condition 2.1") {
  const auto geo = CountablePmf::exponential(1.0);
  {
    auto r = check_condition_2_1(geo, ExponentialSchedule{1.0, 6.1}, {1e6, 1e9, 1e12});
    CHECK(r.verdict("n_min_theta0") == "increasing");
    CHECK(r.series("n_min_theta0").size() == 3);
  }
  {
    auto r = check_condition_2_1(geo, ManualSchedule{{{3, 1}}}, {1e3, 1e4});
    CHECK(r.verdict("n_min_theta0") == "increasing");
  }
  {
    auto r = check_condition_2_1(geo, PowerSchedule{1.0, 1.0}, {10, 100, 1000});
    CHECK(r.verdict("n_min_theta0") == "decreasing");
    CHECK_FALSE(r.notes.empty());
  }
  {
    // Growth like (ln n)^a across a wider grid where k_n moves.
    auto r = check_condition_2_1(geo, ExponentialSchedule{1.0, 6.1}, {1e6, 1e9, 1e12, 1e15});
    CHECK(r.verdict("n_min_theta0") == "increasing");
    // Once the schedule is unclamped, n e^{-k_n} >= (ln n)^a.
    const auto ks = r.series("k_n");
    const auto logs = r.series("log_n_min_theta0");
    for (std::size_t i = 0; i < ks.size(); ++i)
      if (ks[i] > 1) CHECK(logs[i] >= 6.1 * std::log(std::log(std::pow(10.0, 6 + 3 * i))) - 1e-9);
  }
}

TEST_CASE("condition 3.1") {
  const auto geo = CountablePmf::exponential(1.0);
  const std::vector<double> grid{1e4, 1e6, 1e8, 1e10, 1e12};
  {
    auto r = check_condition_3_1(ExponentialSchedule{1.0, 6.1}, MRule{MRule::Kind::k_log_n, 1.0},
                                 geo, grid);
    const auto ks = r.series("k_n");
    const auto r1 = r.series("M_over_cuberoot_n_min_theta0");
    const auto r2 = r.series("k_over_M");
    for (std::size_t i = 0; i < grid.size(); ++i) {
      const double n = grid[i];
      const double M = ks[i] * std::log(n);
      const double nmin = n * truncate(geo, static_cast<std::int64_t>(ks[i])).min_prob();
      CHECK(r1[i] == Approx(M / std::cbrt(nmin)).epsilon(1e-12));
      CHECK(r2[i] == Approx(1.0 / std::log(n)).epsilon(1e-12));
    }
    CHECK(r.verdict("k_over_M") == "decreasing");
  }
  {
    auto r = check_condition_3_1(ManualSchedule{{{1, 3}}}, MRule{MRule::Kind::k_log_n, 1.0}, geo,
                                 grid);
    CHECK(r.verdict("M_over_cuberoot_n_min_theta0") == "decreasing");
  }
  {
    auto r = check_condition_3_1(PowerSchedule{1.0, 0.3}, MRule{MRule::Kind::constant, 5.0}, geo,
                                 grid);
    CHECK(r.verdict("k_over_M") != "decreasing");
  }
  {
    auto r = check_condition_3_1(ExponentialSchedule{1.0, 6.1},
                                 MRule{MRule::Kind::cube_root, 1.0}, geo, grid);
    for (double v : r.series("M_over_cuberoot_n_min_theta0")) CHECK(v == Approx(1.0));
    CHECK(r.verdict("M_over_cuberoot_n_min_theta0") != "decreasing");
  }
}

TEST_CASE("condition 3.5") {
  auto u = TruncatedPmf({1.0 / 3, 1.0 / 3, 1.0 / 3});
  auto t = condition_3_5_terms(DirichletDistribution::symmetric(2, 1.0), u, 1e4, 1e4);
  CHECK(t.half_k_log_n == Approx(std::log(1e4)));
  CHECK(t.log_det_fisher == Approx(3 * std::log(3.0)));
  CHECK(t.neg_log_prior == Approx(-std::log(2.0)));
  CHECK(t.ratio == Approx(std::log(1e4) / 1e4));
  auto big = condition_3_5_terms(DirichletDistribution::symmetric(2, 1.0), u, 1e12, 1e4);
  CHECK(big.ratio < 1e-10);
  auto tiny = TruncatedPmf({1e-9, 0.5, 0.5 - 1e-9});
  auto td = condition_3_5_terms(DirichletDistribution::symmetric(2, 1.0), tiny, 100, 100);
  CHECK(td.max_term == td.log_det_fisher);

  // The grid form agrees with the pointwise terms.
  const auto geo = CountablePmf::exponential(std::numbers::ln2);
  TruncationSchedule s = ManualSchedule{{{10, 4}}};
  auto r = check_condition_3_5(1.5, geo, s, MRule{MRule::Kind::constant, 50.0}, {1e3, 1e4});
  auto direct = condition_3_5_terms(DirichletDistribution::symmetric(4, 1.5), truncate(geo, 4),
                                    50.0, 1e4);
  CHECK(r.series("max_over_M")[1] == Approx(direct.ratio).epsilon(1e-12));
  CHECK(r.series("neg_log_prior")[1] == Approx(direct.neg_log_prior).epsilon(1e-12));
}

TEST_CASE("smoothness report") {
  const auto geo = CountablePmf::exponential(1.0);
  const MRule rule{MRule::Kind::k_log_n, 1.0};
  const std::vector<double> grid{1e6, 1e9, 1e12, 1e15};
  {
    auto r = smoothness_report(1.0, geo, ExponentialSchedule{1.0, 6.1}, rule, grid);
    for (double v : r.series("ratio_bound")) CHECK(v == 1.0);
    CHECK(r.verdict("ratio_bound") == "to_one");
  }
  {
    auto r = smoothness_report(2.0, geo, ManualSchedule{{{1, 3}}}, rule, grid);
    CHECK(r.verdict("ratio_bound") == "to_one");
    const auto v = r.series("log_ratio_bound");
    const double nmin = 1e6 * truncate(geo, 3).min_prob();
    CHECK(v[0] == Approx(3.0 * std::sqrt(3 * std::log(1e6) * 4 / nmin)).epsilon(1e-12));
  }
  {
    auto r = smoothness_report(2.0, geo, PowerSchedule{1.0, 0.9}, rule, {1e2, 1e3, 1e4});
    CHECK(r.verdict("ratio_bound") == "not_decreasing");
  }
}

TEST_CASE("condition report serialization") {
  auto r = check_condition_2_1(CountablePmf::exponential(1.0), ExponentialSchedule{1.0, 6.1},
                               {1e6, 1e9});
  auto rep = r.to_report();
  CHECK(rep.columns == std::vector<std::string>{"n", "statistic", "value"});
  CHECK(rep.rows.size() == r.rows.size());
  CHECK(rep.to_csv(false).find("holds") == std::string::npos);
}
