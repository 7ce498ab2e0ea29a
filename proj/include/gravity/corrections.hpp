#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gravity/panel.hpp"
#include "gravity/ppml.hpp"
#include "gravity/pruner.hpp"

namespace gravity {

// How an odd number of periods is halved: both halves share the middle
// period, or the middle period is left out of both.
enum class OddPeriodSplit { Overlap, DropMiddle };

std::string_view to_string(OddPeriodSplit convention);
OddPeriodSplit parse_odd_period_split(std::string_view text);

struct HalfPanelSplit {
  std::vector<Index> first_half;   // period indices, ascending
  std::vector<Index> second_half;
  OddPeriodSplit convention = OddPeriodSplit::Overlap;
};

// Halves of the periods present in `panel`. Even T: {1..T/2}, {T/2+1..T}.
// Odd T with Overlap: {1..ceil(T/2)}, {ceil(T/2)..T}. Throws ConfigError if
// T < 4.
HalfPanelSplit half_panel_split(const GravityPanel& panel, OddPeriodSplit convention = OddPeriodSplit::Overlap);

// Sub-panels restricted to each half's periods (not yet pruned).
std::pair<GravityPanel, GravityPanel> split_panel(const GravityPanel& panel, const HalfPanelSplit& scheme);

struct SubfitReport {
  std::string label;  // "full", "first_half", "second_half"
  std::optional<PruneReport> prune;
  std::vector<double> beta;
  int outer_iterations = 0;
  FocResiduals residuals;
  std::vector<std::string> warnings;
};

struct CorrectionResult {
  std::string method;
  std::vector<double> beta_corrected;
  std::vector<double> beta_uncorrected;
  std::optional<std::pair<std::vector<double>, std::vector<double>>> half_estimates;
  std::vector<SubfitReport> subfit_reports;
  std::optional<HalfPanelSplit> split;
};

class SubfitError : public Error {
 public:
  SubfitError(std::string which, const std::string& why)
      : Error(which + " subfit failed: " + why), which_(std::move(which)) {}
  const std::string& which() const noexcept { return which_; }

 private:
  std::string which_;
};

// 2 * full - (first + second) / 2, componentwise.
std::vector<double> split_panel_jackknife(std::span<const double> full, std::span<const double> first,
                                          std::span<const double> second);

// Split-panel jackknife. Fits `panel` (unless `full_fit` is supplied), then
// re-prunes and fits each half.
CorrectionResult spj(const GravityPanel& panel, const EstimateConfig& config, const FitResult* full_fit = nullptr,
                     OddPeriodSplit convention = OddPeriodSplit::Overlap);

struct CorrectionContext {
  const GravityPanel& panel;
  const EstimateConfig& config;
  const FitResult& full_fit;
};

using CorrectionProcedure = std::function<CorrectionResult(const CorrectionContext&)>;

// Named bias corrections selectable by the CLI and the Monte Carlo driver.
class CorrectionRegistry {
 public:
  // Registry with "spj" already registered.
  static CorrectionRegistry with_defaults();

  // Throws ConfigError if `name` is taken.
  void register_correction(const std::string& name, CorrectionProcedure procedure);
  bool contains(const std::string& name) const { return procedures_.count(name) > 0; }
  std::vector<std::string> names() const;
  CorrectionResult run(const std::string& name, const CorrectionContext& context) const;

 private:
  std::map<std::string, CorrectionProcedure> procedures_;
};

}  // namespace gravity
