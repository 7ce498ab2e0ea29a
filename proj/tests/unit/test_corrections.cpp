#include <doctest.h>

#include <cmath>

#include "gravity/corrections.hpp"
#include "gravity/error.hpp"
#include "gravity/pruner.hpp"
#include "gravity/simulator.hpp"
#include "../support/test_panels.hpp"

using namespace gravity;
using testing_support::balanced_panel;

namespace {

GravityPanel simulated(int N, int T, double psi, std::uint64_t seed) {
  DgpConfig c;
  c.N = N;
  c.T = T;
  c.psi = psi;
  c.seed = seed;
  return prune(apply_attrition(generate_dgp1(c), c)).panel;
}

std::vector<int> as_ints(const GravityPanel& p, const std::vector<Index>& periods) {
  std::vector<int> out;
  for (Index t : periods) out.push_back(std::stoi(p.labels().periods.label(t)));
  return out;
}

}  // namespace

TEST_CASE("half-panel splits") {
  const auto p4 = balanced_panel(2, 4, [](int, int, int) { return 1.0; });
  auto s = half_panel_split(p4);
  CHECK(as_ints(p4, s.first_half) == std::vector<int>{1, 2});
  CHECK(as_ints(p4, s.second_half) == std::vector<int>{3, 4});

  const auto p5 = balanced_panel(2, 5, [](int, int, int) { return 1.0; });
  s = half_panel_split(p5);
  CHECK(as_ints(p5, s.first_half) == std::vector<int>{1, 2, 3});
  CHECK(as_ints(p5, s.second_half) == std::vector<int>{3, 4, 5});
  s = half_panel_split(p5, OddPeriodSplit::DropMiddle);
  CHECK(as_ints(p5, s.first_half) == std::vector<int>{1, 2});
  CHECK(as_ints(p5, s.second_half) == std::vector<int>{4, 5});

  const auto p3 = balanced_panel(2, 3, [](int, int, int) { return 1.0; });
  CHECK_THROWS_AS(half_panel_split(p3), ConfigError);

  const auto [first, second] = split_panel(p5, half_panel_split(p5));
  CHECK(first.dims().T == 3);
  CHECK(second.dims().T == 3);
  CHECK(first.size() + second.size() == p5.size() + 4);
}

TEST_CASE("odd-period split names") {
  CHECK(parse_odd_period_split("overlap") == OddPeriodSplit::Overlap);
  CHECK(parse_odd_period_split("drop-middle") == OddPeriodSplit::DropMiddle);
  CHECK(to_string(OddPeriodSplit::DropMiddle) == "drop-middle");
  CHECK_THROWS_AS(parse_odd_period_split("middle"), ConfigError);
}

TEST_CASE("jackknife arithmetic") {
  const std::vector<double> full{1.10}, a{1.12}, b{1.16};
  CHECK(split_panel_jackknife(full, a, b)[0] == doctest::Approx(1.06).epsilon(1e-15));
  const std::vector<double> v{0.7, -0.3};
  CHECK(split_panel_jackknife(v, v, v) == v);
  CHECK_THROWS_AS(split_panel_jackknife(v, full, full), ConfigError);
}

TEST_CASE("spj on a simulated panel") {
  const GravityPanel p = simulated(15, 5, 0.3, 11);
  const FitResult full = fit(p);
  const CorrectionResult r = spj(p, {}, &full);
  REQUIRE(r.half_estimates.has_value());
  CHECK(r.method == "spj");
  CHECK(r.beta_uncorrected == full.beta);
  const double expected = 2.0 * full.beta[0] - 0.5 * (r.half_estimates->first[0] + r.half_estimates->second[0]);
  CHECK(r.beta_corrected[0] == expected);
  REQUIRE(r.subfit_reports.size() == 3);
  CHECK(r.subfit_reports[0].label == "full");
  CHECK(r.subfit_reports[1].label == "first_half");
  CHECK(r.subfit_reports[2].label == "second_half");
  CHECK(r.subfit_reports[1].prune.has_value());
  CHECK(r.split->convention == OddPeriodSplit::Overlap);

  // Fitting internally gives the same answer.
  CHECK(spj(p, {}).beta_corrected == r.beta_corrected);
}

TEST_CASE("halves are re-pruned") {
  // Pair (1,2) trades only in period 4: the full panel keeps it, the first
  // half sees a zero pair and drops it.
  auto p = balanced_panel(
      4, 4, [](int i, int j, int t) { return (i == 1 && j == 2 && t != 4) ? 0.0 : 1.0 + i * t + j; },
      [](int i, int j, int t) { return std::vector<double>{std::cos(i * 1.7 + j * t)}; }, {"x"});
  const PruneResult pr = prune(p);
  const CorrectionResult r = spj(pr.panel, {});
  CHECK(pr.report.dropped.empty());
  REQUIRE(r.subfit_reports[1].prune.has_value());
  CHECK(r.subfit_reports[1].prune->count(PruneRule::PairZero) == 2);
  REQUIRE(r.subfit_reports[2].prune.has_value());
  CHECK(r.subfit_reports[2].prune->dropped.empty());
  const auto [first, second] = split_panel(pr.panel, half_panel_split(pr.panel));
  CHECK(is_pruned(prune(first).panel));
  CHECK(is_pruned(prune(second).panel));
}

TEST_CASE("subfit failure names the half") {
  // In the first half the covariate is absorbed by the pair effects.
  const auto p = balanced_panel(
      3, 4, [](int i, int j, int t) { return 1.0 + i + 2 * j + t * i; },
      [](int i, int j, int t) { return std::vector<double>{t <= 2 ? double(i * j) : std::sin(i + j * t)}; }, {"x"});
  try {
    spj(p, {});
    FAIL("expected a subfit error");
  } catch (const SubfitError& e) {
    CHECK(e.which() == "first_half");
  }
}

TEST_CASE("registry") {
  CorrectionRegistry reg = CorrectionRegistry::with_defaults();
  CHECK(reg.contains("spj"));
  CHECK(reg.names() == std::vector<std::string>{"spj"});
  CHECK_THROWS_AS(reg.register_correction("spj", [](const CorrectionContext&) { return CorrectionResult{}; }),
                  ConfigError);
  CHECK_THROWS_AS(reg.register_correction("", [](const CorrectionContext&) { return CorrectionResult{}; }),
                  ConfigError);
  CHECK_THROWS_AS(reg.register_correction("feppml", [](const CorrectionContext&) { return CorrectionResult{}; }),
                  ConfigError);
  reg.register_correction("abc", [](const CorrectionContext& ctx) {
    CorrectionResult r;
    r.beta_corrected = ctx.full_fit.beta;
    r.beta_uncorrected = ctx.full_fit.beta;
    return r;
  });
  const GravityPanel p = simulated(10, 5, 0.0, 2);
  const FitResult f = fit(p);
  const EstimateConfig config;
  const CorrectionResult r = reg.run("abc", CorrectionContext{p, config, f});
  CHECK(r.method == "abc");
  CHECK(r.beta_corrected == f.beta);
  CHECK_THROWS_AS(reg.run("missing", CorrectionContext{p, config, f}), ConfigError);

  DgpConfig c;
  c.N = 10;
  c.seed = 4;
  const auto summary = run_monte_carlo(c, 3, {"feppml", "abc"}, reg);
  CHECK(summary.estimator("abc").mean_estimate == summary.estimator("feppml").mean_estimate);
}
