#include "gravity/json_io.hpp"

#include <cmath>

namespace gravity {

namespace {

Json number_or_null(double value) { return std::isfinite(value) ? Json(value) : Json(nullptr); }

Json named_vector(const std::vector<std::string>& names, const std::vector<double>& values) {
  Json out = Json::object();
  for (std::size_t j = 0; j < names.size() && j < values.size(); ++j) out[names[j]] = number_or_null(values[j]);
  return out;
}

const LabelTable& first_table(const LabelMaps& labels, Grouping grouping) {
  return grouping == Grouping::ImporterTime ? labels.importers : labels.exporters;
}

const LabelTable& second_table(const LabelMaps& labels, Grouping grouping) {
  return grouping == Grouping::Pair ? labels.importers : labels.periods;
}

Json effect_rows(const FixedEffectMap& map, const LabelMaps& labels) {
  Json rows = Json::array();
  const auto keys = map.keys();
  const auto values = map.values();
  for (std::size_t c = 0; c < keys.size(); ++c) {
    rows.push_back(Json::array({first_table(labels, map.grouping()).label(keys[c].first),
                                second_table(labels, map.grouping()).label(keys[c].second),
                                number_or_null(values[c])}));
  }
  return rows;
}

}  // namespace

Json to_json(const PanelDims& dims) {
  return {{"n", dims.n}, {"p_alpha", dims.p_alpha}, {"p_gamma", dims.p_gamma}, {"p_eta", dims.p_eta},
          {"I", dims.I},  {"J", dims.J},             {"T", dims.T}};
}

Json to_json(const FocResiduals& r) {
  return {{"beta", r.beta},
          {"exporter_time", r.exporter_time},
          {"importer_time", r.importer_time},
          {"pair", r.pair},
          {"max", r.max()}};
}

Json to_json(const UnbalancednessDiagnostic& d) {
  return {{"n_star", d.n_star},
          {"p_alpha_star", d.p_alpha_star},
          {"p_gamma_star", d.p_gamma_star},
          {"I_bar", d.I_bar},
          {"J_bar", d.J_bar},
          {"leading_order", d.leading_order},
          {"naive_order", d.naive_order},
          {"amplification", d.amplification}};
}

Json to_json(const PruneReport& report, const LabelMaps& labels, bool with_dropped) {
  Json counts = Json::object();
  for (PruneRule rule : kAllPruneRules) counts[std::string(to_string(rule))] = report.count(rule);
  Json out = {{"rounds", report.rounds},
              {"dropped_total", report.dropped.size()},
              {"dropped_by_rule", counts},
              {"dims_before", to_json(report.dims_before)},
              {"dims_after", to_json(report.dims_after)},
              {"n_star", report.dims_after.n},
              {"p_alpha_star", report.dims_after.p_alpha},
              {"p_gamma_star", report.dims_after.p_gamma},
              {"p_eta_star", report.dims_after.p_eta}};
  if (report.dims_before.n > 0) {
    out["share_kept"] = static_cast<double>(report.dims_after.n) / static_cast<double>(report.dims_before.n);
  }
  if (with_dropped) {
    Json dropped = Json::array();
    for (const DroppedObservation& d : report.dropped) {
      dropped.push_back({{"exporter", labels.exporters.label(d.key.exporter)},
                         {"importer", labels.importers.label(d.key.importer)},
                         {"period", labels.periods.label(d.key.period)},
                         {"rule", to_string(d.rule)},
                         {"round", d.round}});
    }
    out["dropped"] = std::move(dropped);
  }
  return out;
}

Json fixed_effects_json(const FixedEffects& effects, const LabelMaps& labels) {
  return {{"alpha", effect_rows(effects.alpha, labels)},
          {"gamma", effect_rows(effects.gamma, labels)},
          {"eta", effect_rows(effects.eta, labels)}};
}

Json to_json(const FitResult& fit, const LabelMaps& labels, const FitJsonOptions& options) {
  Json out;
  out["covariates"] = fit.covariate_names;
  out["beta"] = named_vector(fit.covariate_names, fit.beta);
  if (options.vcov) {
    const std::vector<double> se = standard_errors(*options.vcov);
    out["standard_errors"] = named_vector(fit.covariate_names, se);
    Json matrix = Json::array();
    for (Eigen::Index r = 0; r < options.vcov->rows(); ++r) {
      Json row = Json::array();
      for (Eigen::Index c = 0; c < options.vcov->cols(); ++c) row.push_back(number_or_null((*options.vcov)(r, c)));
      matrix.push_back(std::move(row));
    }
    out["vcov"] = std::move(matrix);
  }
  if (options.cluster) out["cluster"] = to_string(*options.cluster);
  Json convergence = {{"converged", fit.converged},
                      {"outer_iterations", fit.outer_iterations},
                      {"inner_sweeps", fit.inner_sweeps},
                      {"foc_residuals", to_json(fit.foc_residuals)}};
  if (options.foc_tolerance > 0.0) convergence["foc_tolerance"] = options.foc_tolerance;
  out["convergence"] = std::move(convergence);
  out["log_likelihood"] = number_or_null(fit.log_likelihood);
  out["dims"] = to_json(fit.dims);
  out["warnings"] = fit.warnings;
  if (options.export_fixed_effects) out["fixed_effects"] = fixed_effects_json(fit.fixed_effects, labels);
  return out;
}

Json to_json(const CorrectionResult& correction, const LabelMaps& labels) {
  Json out;
  out["method"] = correction.method;
  out["beta_corrected"] = correction.beta_corrected;
  out["beta_uncorrected"] = correction.beta_uncorrected;
  if (correction.half_estimates) {
    out["half_estimates"] = {{"first_half", correction.half_estimates->first},
                             {"second_half", correction.half_estimates->second}};
  }
  if (correction.split) {
    auto period_labels = [&](const std::vector<Index>& periods) {
      std::vector<std::string> out_labels;
      for (Index t : periods) out_labels.push_back(labels.periods.label(t));
      return out_labels;
    };
    out["split"] = {{"convention", to_string(correction.split->convention)},
                    {"first_half", period_labels(correction.split->first_half)},
                    {"second_half", period_labels(correction.split->second_half)}};
  }
  Json subfits = Json::array();
  for (const SubfitReport& s : correction.subfit_reports) {
    Json sub = {{"label", s.label},
                {"beta", s.beta},
                {"outer_iterations", s.outer_iterations},
                {"foc_residuals", to_json(s.residuals)},
                {"warnings", s.warnings}};
    if (s.prune) sub["prune"] = to_json(*s.prune, labels, false);
    subfits.push_back(std::move(sub));
  }
  out["subfits"] = std::move(subfits);
  return out;
}

}  // namespace gravity
