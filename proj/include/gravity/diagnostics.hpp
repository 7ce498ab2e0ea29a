#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "gravity/panel.hpp"
#include "gravity/pruner.hpp"

namespace gravity {

// Average numbers of trading partners after pruning and the bias order they
// imply, compared with the order a balanced panel of the original size would
// suggest.
struct UnbalancednessDiagnostic {
  std::size_t n_star = 0;
  std::size_t p_alpha_star = 0;
  std::size_t p_gamma_star = 0;
  double I_bar = 0.0;  // n* / p_gamma*
  double J_bar = 0.0;  // n* / p_alpha*
  double leading_order = 0.0;  // 1 / min(I_bar, J_bar)
  double naive_order = 0.0;    // 1 / min(I, J) before pruning
  double amplification = 0.0;  // leading_order / naive_order
};

// Throws FullyUninformativeError if dims_after has no observations.
UnbalancednessDiagnostic heuristic_bias_order(const PanelDims& dims_after, const PanelDims& dims_before);

// Rounds half away from zero.
long long round_half_away(double value);

struct IndustryRow {
  std::string label;
  std::optional<std::string> error;  // set when the panel failed to prune
  std::size_t n = 0;
  std::size_t n_star = 0;
  double share = 0.0;  // n* / n
  UnbalancednessDiagnostic diagnostic;

  bool ok() const noexcept { return !error; }
};

IndustryRow industry_row(const std::string& label, const GravityPanel& panel);
IndustryRow industry_error_row(const std::string& label, const std::string& message);

// One row per input, in input order. Failures are recorded in the row.
std::vector<IndustryRow> industry_report(const std::vector<std::pair<std::string, GravityPanel>>& panels);

// Table in display form: label,n_star,share,I_bar,J_bar with share to three
// decimals and I_bar, J_bar as integers, followed by the unrounded values and
// an error column.
std::string industry_table_csv(const std::vector<IndustryRow>& rows);

// label,I_bar,J_bar at full precision.
std::string figure_data_csv(const std::vector<IndustryRow>& rows);

// 1 / mean(min(I_bar, J_bar)) over successful rows.
struct AverageOrder {
  double excluding_aggregate = 0.0;
  double including_aggregate = 0.0;
  std::size_t rows_excluding = 0;
  std::size_t rows_including = 0;
};

double average_leading_order(const std::vector<double>& min_partner_counts);
AverageOrder average_leading_order(const std::vector<IndustryRow>& rows, const std::string& aggregate_label);

// Number of periods each pair of the original panel survives pruning.
struct PairPresence {
  std::shared_ptr<const LabelMaps> labels;
  std::size_t T = 0;
  std::vector<std::pair<CellKey, std::size_t>> counts;  // sorted by pair
};

PairPresence pair_presence_map(const GravityPanel& before, const GravityPanel& after);

// exporter,importer,count
std::string pair_presence_csv(const PairPresence& presence);

}  // namespace gravity
