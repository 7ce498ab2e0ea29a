#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <set>

#include "gravity/error.hpp"
#include "gravity/ppml.hpp"
#include "gravity/pruner.hpp"
#include "gravity/simulator.hpp"
#include "../support/test_panels.hpp"

using namespace gravity;
using testing_support::balanced_panel;

namespace {

// Observation set by original labels, independent of row order.
std::set<std::tuple<std::string, std::string, std::string>> label_set(const GravityPanel& p) {
  std::set<std::tuple<std::string, std::string, std::string>> out;
  for (const ObsKey& k : p.keys()) {
    out.insert({p.labels().exporters.label(k.exporter), p.labels().importers.label(k.importer),
                p.labels().periods.label(k.period)});
  }
  return out;
}

bool sound(const GravityPanel& p) {
  for (Grouping g : {Grouping::ExporterTime, Grouping::ImporterTime, Grouping::Pair}) {
    for (const auto& [_, s] : cell_sums(p, g)) {
      if (s.zero() || s.singleton()) return false;
    }
  }
  return true;
}

GravityPanel shuffled(const GravityPanel& p, std::mt19937_64& rng) {
  std::vector<std::size_t> order(p.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<ObsKey> keys;
  std::vector<double> flows, x;
  for (std::size_t k : order) {
    keys.push_back(p.key(k));
    flows.push_back(p.flow(k));
    const auto c = p.covariates(k);
    x.insert(x.end(), c.begin(), c.end());
  }
  return GravityPanel(p.shared_labels(), p.covariate_names(), keys, flows, x);
}

}  // namespace

TEST_CASE("nothing to prune") {
  const auto p = balanced_panel(3, 2, [](int i, int j, int t) { return i + j + t; });
  const PruneResult r = prune(p);
  CHECK(r.report.rounds == 1);
  CHECK(r.report.dropped.empty());
  CHECK(r.panel.size() == p.size());
  CHECK(r.report.dims_before == r.report.dims_after);
}

TEST_CASE("hand instance: only the zero pair is dropped") {
  const auto p = testing_support::hand_instance();
  const PruneResult r = prune(p);
  REQUIRE(r.report.dropped.size() == 2);
  CHECK(r.report.count(PruneRule::PairZero) == 2);
  for (const auto& d : r.report.dropped) {
    CHECK(p.labels().exporters.label(d.key.exporter) == "1");
    CHECK(p.labels().importers.label(d.key.importer) == "2");
    CHECK(d.round == 1);
  }
  CHECK(r.report.dims_after.n == 16);
  CHECK(r.report.rounds == 2);
  CHECK(sound(r.panel));
}

TEST_CASE("cell_sums") {
  SUBCASE("pair sums") {
    PanelBuilder b;
    b.add("1", "1", "1", 2.0).add("1", "1", "2", 3.0).add("1", "2", "1", 1.0);
    const auto p = b.build();
    const auto sums = cell_sums(p, Grouping::Pair);
    const auto& s = sums.at(CellKey{0, 0});
    CHECK(s.flow_sum == 5.0);
    CHECK(s.count == 2);
  }
  SUBCASE("zero exporter-time cell") {
    const auto p = balanced_panel(3, 2, [](int i, int, int t) { return (i == 1 && t == 1) ? 0.0 : 1.0; });
    const auto s = cell_sums(p, Grouping::ExporterTime).at(CellKey{0, 0});
    CHECK(s.zero());
    CHECK(s.count == 3);
  }
  SUBCASE("singleton importer-time cell") {
    auto p = balanced_panel(3, 2, [](int, int, int) { return 1.0; });
    p = subset(p, [](const ObsKey& k) { return !(k.importer == 1 && k.period == 0 && k.exporter != 2); });
    const auto s = cell_sums(p, Grouping::ImporterTime).at(CellKey{1, 0});
    CHECK(s.singleton());
    CHECK(s.flow_sum == 1.0);
  }
}

TEST_CASE("singletons cascade") {
  // Exporter "a" appears once in period 1: a singleton that, once dropped,
  // leaves importer "x" with one observation in period 1.
  PanelBuilder b;
  b.add("a", "x", "1", 1).add("b", "y", "1", 2).add("c", "y", "1", 3).add("b", "z", "1", 1).add("c", "z", "1", 4);
  b.add("b", "y", "2", 2).add("c", "y", "2", 3).add("b", "z", "2", 5).add("c", "z", "2", 4);
  const PruneResult r = prune(b.build());
  CHECK(sound(r.panel));
  CHECK(r.report.dropped.size() == 1);
  CHECK(r.report.count(PruneRule::ExporterTimeSingleton) == 1);
}

TEST_CASE("fully uninformative and empty panels") {
  const auto zeros = balanced_panel(2, 2, [](int, int, int) { return 0.0; });
  CHECK_THROWS_AS(prune(zeros), FullyUninformativeError);
  CHECK_THROWS_AS(prune(GravityPanel()), EmptyPanelError);
}

TEST_CASE("soundness, idempotence, conservation and order independence") {
  std::mt19937_64 rng(2024);
  testing_support::RandomPanelSpec spec;
  spec.zero_cell_prob = 0.15;
  spec.drop_prob = 0.3;
  int checked = 0;
  for (int r = 0; r < 300; ++r) {
    const auto p = testing_support::random_panel(rng, spec);
    PruneResult once;
    try {
      once = prune(p);
    } catch (const FullyUninformativeError&) {
      continue;
    }
    ++checked;
    CHECK(sound(once.panel));
    CHECK(is_pruned(once.panel));
    CHECK(prune(once.panel).report.dropped.empty());
    CHECK(once.report.dims_before.n - once.report.dims_after.n == once.report.dropped.size());
    std::set<ObsKey> seen;
    for (const auto& d : once.report.dropped) CHECK(seen.insert(d.key).second);
    CHECK(label_set(apply_report(p, once.report)) == label_set(once.panel));
    CHECK(label_set(prune(shuffled(p, rng)).panel) == label_set(once.panel));
  }
  CHECK(checked > 100);
}

TEST_CASE("verify_uninformative") {
  SUBCASE("nothing pruned") {
    const auto p = balanced_panel(
        3, 2, [](int i, int j, int t) { return 1.0 + i * j + t; },
        [](int i, int j, int t) {
          return std::vector<double>{0.3 * i * t - 0.2 * j * t + 0.1 * i * j + 0.05 * i * j * t};
        },
        {"x1"});
    const PruneResult r = prune(p);
    CHECK(verify_uninformative(p, r.report, {}, 0.0).ok());
  }
  SUBCASE("hand instance") {
    const auto p = testing_support::hand_instance();
    const auto v = verify_uninformative(p, prune(p).report, {}, 1e-8);
    CHECK(v.status == VerificationStatus::Consistent);
    CHECK(v.max_abs_difference <= 1e-8);
  }
  SUBCASE("simulated panel with attrition") {
    DgpConfig c;
    c.N = 20;
    c.psi = 0.3;
    c.seed = 5;
    const auto p = apply_attrition(generate_dgp1(c), c);
    const auto v = verify_uninformative(p, prune(p).report, {}, 1e-6);
    CHECK(v.status == VerificationStatus::Consistent);
  }
}
