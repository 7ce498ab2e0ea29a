#pragma once

#include <Eigen/Dense>
#include <json.hpp>

#include <optional>

#include "gravity/corrections.hpp"
#include "gravity/diagnostics.hpp"
#include "gravity/panel.hpp"
#include "gravity/ppml.hpp"
#include "gravity/pruner.hpp"

namespace gravity {

using Json = nlohmann::ordered_json;

Json to_json(const PanelDims& dims);
Json to_json(const FocResiduals& residuals);
Json to_json(const UnbalancednessDiagnostic& diagnostic);

// Rounds, per-rule counts, dims and, optionally, every dropped observation
// with its rule and round (labels from `labels`).
Json to_json(const PruneReport& report, const LabelMaps& labels, bool with_dropped = true);

// Fixed effects as {alpha: [[i, t, value]...], gamma: ..., eta: ...}; -inf is
// written as null.
Json fixed_effects_json(const FixedEffects& effects, const LabelMaps& labels);

struct FitJsonOptions {
  std::optional<Eigen::MatrixXd> vcov;
  std::optional<ClusterGrouping> cluster;
  bool export_fixed_effects = false;
  double foc_tolerance = 0.0;
};

Json to_json(const FitResult& fit, const LabelMaps& labels, const FitJsonOptions& options = {});
Json to_json(const CorrectionResult& correction, const LabelMaps& labels);

}  // namespace gravity
