#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <string_view>
#include <vector>

#include "gravity/panel.hpp"

namespace gravity {

struct EstimateConfig;

// Rule that removed an observation. Zero rules come from fixed effects whose
// first-order condition is solved by -infinity; singleton rules from cells in
// which one fixed effect fits the lone observation exactly.
enum class PruneRule {
  ExporterTimeZero,
  ImporterTimeZero,
  PairZero,
  ExporterTimeSingleton,
  ImporterTimeSingleton,
  PairSingleton,
};

inline constexpr std::array<PruneRule, 6> kAllPruneRules = {
    PruneRule::ExporterTimeZero,      PruneRule::ImporterTimeZero,      PruneRule::PairZero,
    PruneRule::ExporterTimeSingleton, PruneRule::ImporterTimeSingleton, PruneRule::PairSingleton,
};

std::string_view to_string(PruneRule rule);

struct DroppedObservation {
  ObsKey key;
  PruneRule rule;
  int round;  // 1-based
};

struct PruneReport {
  int rounds = 0;  // includes the final round that dropped nothing
  std::vector<DroppedObservation> dropped;
  PanelDims dims_before;
  PanelDims dims_after;

  std::size_t count(PruneRule rule) const;
};

struct PruneResult {
  GravityPanel panel;
  PruneReport report;
};

// Iteratively removes uninformative observations until a fixed point. Each
// round applies, in order and each on the panel left by the previous rule:
// exporter-time zero cells, importer-time zero cells, pair zero cells, then
// exporter-time, importer-time and pair singletons. A cell is zero iff its flow
// sum is exactly 0.0 and singleton iff it holds exactly one observation.
//
// Throws FullyUninformativeError if nothing survives, EmptyPanelError on an
// empty input.
PruneResult prune(const GravityPanel& panel);

struct CellSum {
  double flow_sum = 0.0;
  std::size_t count = 0;

  bool zero() const noexcept { return flow_sum == 0.0; }
  bool singleton() const noexcept { return count == 1; }
};

std::map<CellKey, CellSum> cell_sums(const GravityPanel& panel, Grouping grouping);

// True iff no cell of any grouping is zero or singleton.
bool is_pruned(const GravityPanel& panel);

// Rebuilds the pruned panel from the original and a report.
GravityPanel apply_report(const GravityPanel& original, const PruneReport& report);

enum class VerificationStatus { Consistent, Inconsistent, Inconclusive };

struct VerificationResult {
  VerificationStatus status = VerificationStatus::Inconclusive;
  std::vector<double> beta_original;
  std::vector<double> beta_pruned;
  double max_abs_difference = 0.0;
  std::string note;

  bool ok() const noexcept { return status == VerificationStatus::Consistent; }
};

// Slow cross-check: fits FE-PPML on the original and on the pruned panel and
// compares the slope estimates componentwise. Non-convergence on the
// unpruned panel is Inconclusive, not a failure.
VerificationResult verify_uninformative(const GravityPanel& original, const PruneReport& report,
                                        const EstimateConfig& config, double tolerance);

}  // namespace gravity
