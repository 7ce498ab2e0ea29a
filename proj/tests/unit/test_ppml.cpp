#include <doctest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "gravity/error.hpp"
#include "gravity/ppml.hpp"
#include "gravity/pruner.hpp"
#include "gravity/simulator.hpp"
#include "../oracle/dense_poisson.hpp"
#include "../support/test_panels.hpp"

using namespace gravity;
using testing_support::balanced_panel;

namespace {

double max_rel_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) m = std::max(m, std::abs(a[k] - b[k]) / std::max(1.0, std::abs(b[k])));
  return m;
}

// Pruned random panel on which both the toolkit and the oracle fit.
struct Instance {
  GravityPanel panel;
  FitResult fit;
  oracle::Fit reference;
};

Instance oracle_instance(std::mt19937_64& rng, const testing_support::RandomPanelSpec& spec) {
  for (;;) {
    try {
      GravityPanel p = prune(testing_support::random_panel(rng, spec)).panel;
      const auto rows = testing_support::oracle_rows(p);
      if (!oracle::existence_guaranteed(rows, static_cast<int>(p.num_covariates()))) continue;
      FitResult f = fit(p);
      oracle::Fit o = oracle::fit(rows, static_cast<int>(p.num_covariates()));
      return {std::move(p), std::move(f), std::move(o)};
    } catch (const std::exception&) {
    }
  }
}

GravityPanel noiseless_panel(double beta) {
  return balanced_panel(
      5, 3,
      [beta](int i, int j, int t) {
        const double x = std::sin(1.3 * i + 0.7 * j * t) + 0.1 * i * t;
        return std::exp(beta * x + 0.2 * i * t - 0.1 * j * t + 0.05 * i * j - 0.3);
      },
      [](int i, int j, int t) { return std::vector<double>{std::sin(1.3 * i + 0.7 * j * t) + 0.1 * i * t}; }, {"x1"});
}

}  // namespace

TEST_CASE("noiseless panel recovers beta") {
  for (double beta : {-0.7, 0.0, 1.0, 2.5}) {
    const FitResult f = fit(noiseless_panel(beta));
    CHECK(f.converged);
    CHECK(std::abs(f.beta[0] - beta) <= 1e-8);
    CHECK(f.foc_residuals.max() <= 1e-8);
  }
}

TEST_CASE("config validation") {
  EstimateConfig c;
  c.foc_tolerance = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.max_outer_iterations = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = {};
  c.exponent_cap = 0.5;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("matches the dense dummy-variable oracle") {
  std::mt19937_64 rng(77);
  testing_support::RandomPanelSpec spec;
  spec.I_min = spec.I_max = spec.J_min = spec.J_max = 4;
  spec.T_min = spec.T_max = 2;
  spec.K_min = spec.K_max = 1;
  for (int r = 0; r < 10; ++r) {
    const Instance in = oracle_instance(rng, spec);
    CHECK(std::abs(in.fit.beta[0] - in.reference.beta(0)) <= 1e-6);
    CHECK(in.fit.outer_iterations <= 25);
    const auto fitted = std::vector<double>(in.reference.mu.data(), in.reference.mu.data() + in.reference.mu.size());
    CHECK(max_rel_diff(in.fit.fitted, fitted) <= 1e-6);
    // The oracle also solves the first-order conditions.
    CHECK(in.reference.gradient_norm <= 1e-8);

    const Eigen::MatrixXd v = cluster_robust_vcov(in.panel, in.fit, {ClusterGrouping::Pair});
    const Eigen::MatrixXd w = oracle::sandwich(testing_support::oracle_rows(in.panel), in.reference, 1,
                                               in.reference.cluster);
    // Absolute floor for instances whose meat is numerically zero.
    const double floor = 1e-12 * std::abs(oracle::bread(in.reference, 1)(0, 0));
    CHECK(std::abs(v(0, 0) - w(0, 0)) <= 1e-6 * std::abs(w(0, 0)) + floor);
  }
}

TEST_CASE("two covariates against the oracle, other cluster groupings") {
  std::mt19937_64 rng(78);
  testing_support::RandomPanelSpec spec;
  spec.K_min = spec.K_max = 2;
  for (int r = 0; r < 5; ++r) {
    const Instance in = oracle_instance(rng, spec);
    for (int k = 0; k < 2; ++k) CHECK(std::abs(in.fit.beta[k] - in.reference.beta(k)) <= 1e-6);
    const auto rows = testing_support::oracle_rows(in.panel);
    std::vector<int> by_exporter, by_obs(rows.size());
    for (const auto& row : rows) by_exporter.push_back(row.i);
    std::iota(by_obs.begin(), by_obs.end(), 0);
    const Eigen::MatrixXd ve = cluster_robust_vcov(in.panel, in.fit, {ClusterGrouping::Exporter});
    const Eigen::MatrixXd we = oracle::sandwich(rows, in.reference, 2, by_exporter);
    CHECK((ve - we).norm() <= 1e-6 * we.norm());
    const Eigen::MatrixXd vn = cluster_robust_vcov(in.panel, in.fit, {ClusterGrouping::None});
    const Eigen::MatrixXd wn = oracle::sandwich(rows, in.reference, 2, by_obs);
    CHECK((vn - wn).norm() <= 1e-6 * wn.norm());
    CHECK((ve - ve.transpose()).norm() == 0.0);
    const auto se = standard_errors(ve);
    CHECK(se[0] > 0.0);
  }
}

TEST_CASE("foc audit") {
  std::mt19937_64 rng(79);
  const Instance in = oracle_instance(rng, {});
  const FocResiduals r = foc_residuals(in.panel, in.fit);
  CHECK(r.max() <= 1e-8);
  CHECK(r.beta == doctest::Approx(in.fit.foc_residuals.beta).epsilon(1e-3).scale(1e-9));

  FitResult perturbed = in.fit;
  perturbed.beta[0] += 0.1;
  CHECK(foc_residuals(in.panel, perturbed).beta > 1e-8);

  const auto lambda = predict(in.panel, in.fit);
  CHECK(max_rel_diff(lambda, in.fit.fitted) <= 1e-10);
}

TEST_CASE("fixed-effect maps cover the panel's cells and are finite") {
  std::mt19937_64 rng(80);
  const Instance in = oracle_instance(rng, {});
  CHECK(in.fit.fixed_effects.alpha.size() == in.panel.dims().p_alpha);
  CHECK(in.fit.fixed_effects.gamma.size() == in.panel.dims().p_gamma);
  CHECK(in.fit.fixed_effects.eta.size() == in.panel.dims().p_eta);
  for (const FixedEffectMap* m : {&in.fit.fixed_effects.alpha, &in.fit.fixed_effects.gamma, &in.fit.fixed_effects.eta})
    for (double v : m->values()) CHECK(std::isfinite(v));
  for (const ObsKey& k : in.panel.keys()) CHECK(in.fit.fixed_effects.eta.find(cell_of(k, Grouping::Pair)) != nullptr);
  CHECK(in.fit.warnings.empty());
}

TEST_CASE("Newton step is zero at the root") {
  std::mt19937_64 rng(81);
  const Instance in = oracle_instance(rng, {});
  const auto next = fit_beta_step(in.panel, in.fit);
  for (std::size_t k = 0; k < next.size(); ++k) CHECK(std::abs(next[k] - in.fit.beta[k]) <= 1e-8);
}

TEST_CASE("absorbed covariate is an identification error") {
  const auto p = balanced_panel(
      3, 2, [](int i, int j, int t) { return 1.0 + i + j + t; },
      [](int i, int j, int) { return std::vector<double>{0.5 * i - j}; }, {"dist"});
  try {
    fit(p);
    FAIL("expected an identification error");
  } catch (const IdentificationError& e) {
    CHECK(e.column() == "dist");
  }
  const auto constant = balanced_panel(
      3, 2, [](int i, int j, int t) { return 1.0 + i + j + t; }, [](int, int, int) { return std::vector<double>{2.0}; },
      {"c"});
  CHECK_THROWS_AS(fit(constant), IdentificationError);
}

TEST_CASE("concentrating the fixed effects") {
  SUBCASE("constant flows") {
    const auto p = balanced_panel(3, 2, [](int, int, int) { return 4.0; }, [](int i, int j, int t) {
      return std::vector<double>{double(i * j + t)};
    }, {"x"});
    const std::vector<double> zero{0.0};
    FitResult f;
    f.beta = zero;
    f.fixed_effects = concentrate_fixed_effects(p, zero, nullptr);
    for (double l : predict(p, f)) CHECK(l == doctest::Approx(4.0).epsilon(1e-10));
    const FocResiduals r = foc_residuals(p, f);
    CHECK(std::max({r.exporter_time, r.importer_time, r.pair}) <= 1e-10);
  }
  SUBCASE("single pair, two periods") {
    // Every exporter-time cell holds one observation here, so the three-way
    // solution fits each flow exactly; the pair sum is 6 either way.
    PanelBuilder b;
    b.add("1", "2", "1", 2.0).add("1", "2", "2", 4.0);
    const auto p = b.build();
    FitResult f;
    f.fixed_effects = concentrate_fixed_effects(p, {}, nullptr);
    const auto l = predict(p, f);
    CHECK(l[0] + l[1] == doctest::Approx(6.0).epsilon(1e-10));
    CHECK(l[0] == doctest::Approx(2.0).epsilon(1e-8));
  }
  SUBCASE("random positive panel reproduces the margins") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.5, 5.0);
    const auto p = balanced_panel(3, 2, [&](int, int, int) { return u(rng); }, [&](int, int, int) {
      return std::vector<double>{u(rng)};
    }, {"x"});
    const std::vector<double> beta{0.3};
    FitResult f;
    f.beta = beta;
    f.fixed_effects = concentrate_fixed_effects(p, beta, nullptr);
    const FocResiduals r = foc_residuals(p, f);
    CHECK(std::max({r.exporter_time, r.importer_time, r.pair}) <= 1e-8);
  }
}

TEST_CASE("no covariates") {
  const auto p = balanced_panel(3, 3, [](int i, int j, int t) { return 1.0 + i * j + t * j; });
  const FitResult f = fit(p);
  CHECK(f.beta.empty());
  CHECK(f.converged);
  CHECK(f.foc_residuals.max() <= 1e-8);
}

TEST_CASE("invariance to row order and scale equivariance") {
  DgpConfig c;
  c.N = 12;
  c.psi = 0.2;
  c.seed = 99;
  const GravityPanel p = prune(apply_attrition(generate_dgp1(c), c)).panel;
  const FitResult base = fit(p);

  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(1);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<ObsKey> keys;
  std::vector<double> flows, x;
  for (std::size_t k : order) {
    keys.push_back(p.key(k));
    flows.push_back(p.flow(k));
    x.push_back(p.covariate(k, 0));
  }
  const GravityPanel q(p.shared_labels(), p.covariate_names(), keys, flows, x);
  const FitResult g = fit(q);
  CHECK(std::abs(g.beta[0] - base.beta[0]) <= 1e-8);
  for (std::size_t m = 0; m < order.size(); ++m) {
    CHECK(std::abs(g.fitted[m] - base.fitted[order[m]]) <= 1e-8 * std::max(1.0, base.fitted[order[m]]));
  }

  std::vector<double> scaled(p.flows().begin(), p.flows().end());
  for (double& y : scaled) y *= 1000.0;
  const FitResult s = fit(p.with_flows(scaled));
  CHECK(std::abs(s.beta[0] - base.beta[0]) <= 1e-8);
  for (std::size_t k = 0; k < p.size(); ++k) {
    CHECK(std::abs(s.fitted[k] - 1000.0 * base.fitted[k]) <= 1e-8 * std::max(1.0, 1000.0 * base.fitted[k]));
  }
}

TEST_CASE("unpruned panels get warnings, converge, and agree with the pruned fit") {
  const auto p = testing_support::hand_instance();
  const FitResult raw = fit(p);
  CHECK_FALSE(raw.warnings.empty());
  const FitResult pruned = fit(prune(p).panel);
  CHECK(pruned.warnings.empty());
  CHECK(std::abs(raw.beta[0] - pruned.beta[0]) <= 1e-8);
}

TEST_CASE("cluster groupings parse") {
  CHECK(parse_cluster_grouping("pair") == ClusterGrouping::Pair);
  CHECK(parse_cluster_grouping("none") == ClusterGrouping::None);
  CHECK(to_string(ClusterGrouping::Importer) == "importer");
  CHECK_THROWS_AS(parse_cluster_grouping("country"), ConfigError);
}

TEST_CASE("pair-clustered covariance on simulated data is symmetric positive semidefinite") {
  DgpConfig c;
  c.N = 15;
  c.seed = 3;
  const GravityPanel p = prune(apply_attrition(generate_dgp1(c), c)).panel;
  const FitResult f = fit(p);
  const Eigen::MatrixXd v = cluster_robust_vcov(p, f, {ClusterGrouping::Pair});
  CHECK(v.rows() == 1);
  CHECK(v(0, 0) > 0.0);
}
