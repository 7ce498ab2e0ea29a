#include "gravity/corrections.hpp"

#include <algorithm>
#include <set>

namespace gravity {

std::string_view to_string(OddPeriodSplit convention) {
  return convention == OddPeriodSplit::Overlap ? "overlap" : "drop-middle";
}

OddPeriodSplit parse_odd_period_split(std::string_view text) {
  if (text == "overlap") return OddPeriodSplit::Overlap;
  if (text == "drop-middle") return OddPeriodSplit::DropMiddle;
  throw ConfigError("unknown odd-period split '" + std::string(text) + "' (expected overlap or drop-middle)");
}

HalfPanelSplit half_panel_split(const GravityPanel& panel, OddPeriodSplit convention) {
  std::set<Index> present;
  for (const ObsKey& key : panel.keys()) present.insert(key.period);
  const std::vector<Index> periods(present.begin(), present.end());
  const std::size_t T = periods.size();
  if (T < 4) {
    throw ConfigError("split-panel jackknife needs at least 4 periods, panel has " + std::to_string(T));
  }
  HalfPanelSplit split;
  split.convention = convention;
  const std::size_t half = T / 2;
  if (T % 2 == 0) {
    split.first_half.assign(periods.begin(), periods.begin() + static_cast<std::ptrdiff_t>(half));
    split.second_half.assign(periods.begin() + static_cast<std::ptrdiff_t>(half), periods.end());
  } else if (convention == OddPeriodSplit::Overlap) {
    split.first_half.assign(periods.begin(), periods.begin() + static_cast<std::ptrdiff_t>(half + 1));
    split.second_half.assign(periods.begin() + static_cast<std::ptrdiff_t>(half), periods.end());
  } else {
    split.first_half.assign(periods.begin(), periods.begin() + static_cast<std::ptrdiff_t>(half));
    split.second_half.assign(periods.begin() + static_cast<std::ptrdiff_t>(half + 1), periods.end());
  }
  return split;
}

std::pair<GravityPanel, GravityPanel> split_panel(const GravityPanel& panel, const HalfPanelSplit& scheme) {
  auto restrict_to = [&](const std::vector<Index>& periods) {
    return subset(panel, [&](const ObsKey& key) {
      return std::binary_search(periods.begin(), periods.end(), key.period);
    });
  };
  return {restrict_to(scheme.first_half), restrict_to(scheme.second_half)};
}

std::vector<double> split_panel_jackknife(std::span<const double> full, std::span<const double> first,
                                          std::span<const double> second) {
  if (first.size() != full.size() || second.size() != full.size()) {
    throw ConfigError("split-panel jackknife inputs differ in length");
  }
  std::vector<double> corrected(full.size());
  for (std::size_t j = 0; j < full.size(); ++j) corrected[j] = 2.0 * full[j] - 0.5 * (first[j] + second[j]);
  return corrected;
}

namespace {

SubfitReport report_of(std::string label, const FitResult& fit, std::optional<PruneReport> prune_report) {
  return {std::move(label), std::move(prune_report), fit.beta, fit.outer_iterations, fit.foc_residuals, fit.warnings};
}

}  // namespace

CorrectionResult spj(const GravityPanel& panel, const EstimateConfig& config, const FitResult* full_fit,
                     OddPeriodSplit convention) {
  FitResult own_fit;
  if (!full_fit) {
    try {
      own_fit = fit(panel, config);
    } catch (const Error& e) {
      throw SubfitError("full", e.what());
    }
    full_fit = &own_fit;
  }

  const HalfPanelSplit scheme = half_panel_split(panel, convention);
  auto [first, second] = split_panel(panel, scheme);

  CorrectionResult result;
  result.method = "spj";
  result.beta_uncorrected = full_fit->beta;
  result.split = scheme;
  result.subfit_reports.push_back(report_of("full", *full_fit, std::nullopt));

  std::vector<std::vector<double>> halves;
  for (auto& [label, sub] : {std::pair<std::string, GravityPanel*>{"first_half", &first},
                             std::pair<std::string, GravityPanel*>{"second_half", &second}}) {
    try {
      PruneResult pruned = prune(*sub);
      const FitResult half_fit = fit(pruned.panel, config);
      halves.push_back(half_fit.beta);
      result.subfit_reports.push_back(report_of(label, half_fit, std::move(pruned.report)));
    } catch (const Error& e) {
      throw SubfitError(label, e.what());
    }
  }
  result.beta_corrected = split_panel_jackknife(full_fit->beta, halves[0], halves[1]);
  result.half_estimates = std::make_pair(std::move(halves[0]), std::move(halves[1]));
  return result;
}

CorrectionRegistry CorrectionRegistry::with_defaults() {
  CorrectionRegistry registry;
  registry.register_correction("spj", [](const CorrectionContext& ctx) {
    return spj(ctx.panel, ctx.config, &ctx.full_fit);
  });
  return registry;
}

void CorrectionRegistry::register_correction(const std::string& name, CorrectionProcedure procedure) {
  if (name.empty()) throw ConfigError("correction name must not be empty");
  if (name == "feppml") throw ConfigError("'feppml' is reserved for the uncorrected estimator");
  if (!procedures_.emplace(name, std::move(procedure)).second) {
    throw ConfigError("correction '" + name + "' is already registered");
  }
}

std::vector<std::string> CorrectionRegistry::names() const {
  std::vector<std::string> out;
  for (const auto& [name, _] : procedures_) out.push_back(name);
  return out;
}

CorrectionResult CorrectionRegistry::run(const std::string& name, const CorrectionContext& context) const {
  auto it = procedures_.find(name);
  if (it == procedures_.end()) throw ConfigError("unknown correction '" + name + "'");
  CorrectionResult result = it->second(context);
  if (result.method.empty()) result.method = name;
  return result;
}

}  // namespace gravity
