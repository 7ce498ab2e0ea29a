#include "gravity/pruner.hpp"

#include <algorithm>

#include "gravity/cells.hpp"
#include "gravity/error.hpp"

namespace gravity {

std::string_view to_string(PruneRule rule) {
  switch (rule) {
    case PruneRule::ExporterTimeZero: return "exporter_time_zero";
    case PruneRule::ImporterTimeZero: return "importer_time_zero";
    case PruneRule::PairZero: return "pair_zero";
    case PruneRule::ExporterTimeSingleton: return "exporter_time_singleton";
    case PruneRule::ImporterTimeSingleton: return "importer_time_singleton";
    case PruneRule::PairSingleton: break;
  }
  return "pair_singleton";
}

std::size_t PruneReport::count(PruneRule rule) const {
  return static_cast<std::size_t>(
      std::count_if(dropped.begin(), dropped.end(), [rule](const DroppedObservation& d) { return d.rule == rule; }));
}

namespace {

Grouping grouping_of(PruneRule rule) {
  switch (rule) {
    case PruneRule::ExporterTimeZero:
    case PruneRule::ExporterTimeSingleton: return Grouping::ExporterTime;
    case PruneRule::ImporterTimeZero:
    case PruneRule::ImporterTimeSingleton: return Grouping::ImporterTime;
    case PruneRule::PairZero:
    case PruneRule::PairSingleton: break;
  }
  return Grouping::Pair;
}

bool is_zero_rule(PruneRule rule) {
  return rule == PruneRule::ExporterTimeZero || rule == PruneRule::ImporterTimeZero || rule == PruneRule::PairZero;
}

}  // namespace

PruneResult prune(const GravityPanel& panel) {
  if (panel.empty()) throw EmptyPanelError("cannot prune an empty panel");

  const std::size_t n = panel.size();
  const std::array<CellIndex, 3> index = {CellIndex(panel, Grouping::ExporterTime),
                                          CellIndex(panel, Grouping::ImporterTime),
                                          CellIndex(panel, Grouping::Pair)};
  auto index_for = [&](Grouping g) -> const CellIndex& { return index[static_cast<std::size_t>(g)]; };

  std::vector<char> alive(n, 1);
  PruneReport report;
  report.dims_before = panel.dims();

  std::vector<CompensatedSum> sums;
  std::vector<std::size_t> counts;
  for (int round = 1;; ++round) {
    report.rounds = round;
    bool changed = false;
    for (PruneRule rule : kAllPruneRules) {
      const CellIndex& cells = index_for(grouping_of(rule));
      const bool zero_rule = is_zero_rule(rule);
      sums.assign(cells.num_cells(), CompensatedSum{});
      counts.assign(cells.num_cells(), 0);
      for (std::size_t k = 0; k < n; ++k) {
        if (!alive[k]) continue;
        const auto c = static_cast<std::size_t>(cells.cell(k));
        sums[c].add(panel.flow(k));
        ++counts[c];
      }
      for (std::size_t k = 0; k < n; ++k) {
        if (!alive[k]) continue;
        const auto c = static_cast<std::size_t>(cells.cell(k));
        const bool drop = zero_rule ? sums[c].value() == 0.0 : counts[c] == 1;
        if (drop) {
          alive[k] = 0;
          report.dropped.push_back({panel.key(k), rule, round});
          changed = true;
        }
      }
    }
    if (!changed) break;
  }

  if (report.dropped.size() == n) {
    throw FullyUninformativeError("every observation is uninformative; nothing left to estimate");
  }
  GravityPanel pruned = report.dropped.empty() ? panel : subset_mask(panel, alive);
  report.dims_after = pruned.dims();
  return {std::move(pruned), std::move(report)};
}

std::map<CellKey, CellSum> cell_sums(const GravityPanel& panel, Grouping grouping) {
  std::map<CellKey, CompensatedSum> sums;
  std::map<CellKey, CellSum> out;
  for (std::size_t k = 0; k < panel.size(); ++k) {
    const CellKey c = cell_of(panel.key(k), grouping);
    sums[c].add(panel.flow(k));
    ++out[c].count;
  }
  for (auto& [key, cell] : out) cell.flow_sum = sums[key].value();
  return out;
}

bool is_pruned(const GravityPanel& panel) {
  for (Grouping g : {Grouping::ExporterTime, Grouping::ImporterTime, Grouping::Pair}) {
    for (const auto& [key, cell] : cell_sums(panel, g)) {
      if (cell.zero() || cell.singleton()) return false;
    }
  }
  return true;
}

GravityPanel apply_report(const GravityPanel& original, const PruneReport& report) {
  if (report.dropped.empty()) return original;
  std::vector<ObsKey> dropped;
  dropped.reserve(report.dropped.size());
  for (const auto& d : report.dropped) dropped.push_back(d.key);
  std::sort(dropped.begin(), dropped.end());
  return subset(original, [&](const ObsKey& key) { return !std::binary_search(dropped.begin(), dropped.end(), key); });
}

}  // namespace gravity
