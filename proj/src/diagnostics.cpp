#include "gravity/diagnostics.hpp"

#include "gravity/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

namespace gravity {

UnbalancednessDiagnostic heuristic_bias_order(const PanelDims& dims_after, const PanelDims& dims_before) {
  if (dims_after.n == 0 || dims_after.p_alpha == 0 || dims_after.p_gamma == 0) {
    throw FullyUninformativeError("no informative observations left");
  }
  const std::size_t naive_n = std::min(dims_before.I, dims_before.J);
  if (naive_n == 0) throw EmptyPanelError("pre-prune panel has no exporters or importers");

  UnbalancednessDiagnostic d;
  d.n_star = dims_after.n;
  d.p_alpha_star = dims_after.p_alpha;
  d.p_gamma_star = dims_after.p_gamma;
  d.I_bar = static_cast<double>(d.n_star) / static_cast<double>(d.p_gamma_star);
  d.J_bar = static_cast<double>(d.n_star) / static_cast<double>(d.p_alpha_star);
  d.leading_order = 1.0 / std::min(d.I_bar, d.J_bar);
  d.naive_order = 1.0 / static_cast<double>(naive_n);
  d.amplification = d.leading_order / d.naive_order;
  return d;
}

long long round_half_away(double value) { return std::llround(value); }

IndustryRow industry_row(const std::string& label, const GravityPanel& panel) {
  try {
    const PruneResult pruned = prune(panel);
    IndustryRow row;
    row.label = label;
    row.n = pruned.report.dims_before.n;
    row.n_star = pruned.report.dims_after.n;
    row.share = static_cast<double>(row.n_star) / static_cast<double>(row.n);
    row.diagnostic = heuristic_bias_order(pruned.report.dims_after, pruned.report.dims_before);
    return row;
  } catch (const Error& e) {
    return industry_error_row(label, e.what());
  }
}

IndustryRow industry_error_row(const std::string& label, const std::string& message) {
  IndustryRow row;
  row.label = label;
  row.error = message;
  return row;
}

std::vector<IndustryRow> industry_report(const std::vector<std::pair<std::string, GravityPanel>>& panels) {
  std::vector<IndustryRow> rows;
  rows.reserve(panels.size());
  for (const auto& [label, panel] : panels) rows.push_back(industry_row(label, panel));
  return rows;
}

namespace {

std::string csv_field(const std::string& text) {
  if (text.find_first_of(",\"\n\r") == std::string::npos) return text;
  std::string out = "\"";
  for (char c : text) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string three_decimals(double value) {
  const long long milli = round_half_away(value * 1000.0);
  char buffer[32];
  std::snprintf(buffer, sizeof buffer, "%lld.%03lld", milli / 1000, milli % 1000);
  return buffer;
}

}  // namespace

std::string industry_table_csv(const std::vector<IndustryRow>& rows) {
  std::ostringstream out;
  out << "label,n_star,share,I_bar,J_bar,n,I_bar_exact,J_bar_exact,leading_order,error\n";
  for (const IndustryRow& row : rows) {
    out << csv_field(row.label) << ',';
    if (!row.ok()) {
      out << ",,,,,,,," << csv_field(*row.error) << '\n';
      continue;
    }
    const auto& d = row.diagnostic;
    out << row.n_star << ',' << three_decimals(row.share) << ',' << round_half_away(d.I_bar) << ','
        << round_half_away(d.J_bar) << ',' << row.n << ',' << format_double(d.I_bar) << ','
        << format_double(d.J_bar) << ',' << format_double(d.leading_order) << ",\n";
  }
  return out.str();
}

std::string figure_data_csv(const std::vector<IndustryRow>& rows) {
  std::ostringstream out;
  out << "label,I_bar,J_bar\n";
  for (const IndustryRow& row : rows) {
    if (!row.ok()) continue;
    out << csv_field(row.label) << ',' << format_double(row.diagnostic.I_bar) << ','
        << format_double(row.diagnostic.J_bar) << '\n';
  }
  return out.str();
}

double average_leading_order(const std::vector<double>& min_partner_counts) {
  if (min_partner_counts.empty()) throw ConfigError("no rows to average");
  double sum = 0.0;
  for (double v : min_partner_counts) sum += v;
  return static_cast<double>(min_partner_counts.size()) / sum;
}

AverageOrder average_leading_order(const std::vector<IndustryRow>& rows, const std::string& aggregate_label) {
  std::vector<double> without, with;
  for (const IndustryRow& row : rows) {
    if (!row.ok()) continue;
    const double m = std::min(row.diagnostic.I_bar, row.diagnostic.J_bar);
    with.push_back(m);
    if (row.label != aggregate_label) without.push_back(m);
  }
  AverageOrder result;
  result.rows_excluding = without.size();
  result.rows_including = with.size();
  if (!without.empty()) result.excluding_aggregate = average_leading_order(without);
  if (!with.empty()) result.including_aggregate = average_leading_order(with);
  return result;
}

PairPresence pair_presence_map(const GravityPanel& before, const GravityPanel& after) {
  std::map<CellKey, std::size_t> counts;
  std::set<Index> periods;
  for (const ObsKey& key : before.keys()) {
    counts.emplace(cell_of(key, Grouping::Pair), 0);
    periods.insert(key.period);
  }
  for (const ObsKey& key : after.keys()) {
    auto it = counts.find(cell_of(key, Grouping::Pair));
    if (it == counts.end()) throw DataError("pruned panel contains a pair absent from the original: " + after.describe(key));
    ++it->second;
  }
  PairPresence presence;
  presence.labels = before.shared_labels();
  presence.T = periods.size();
  presence.counts.assign(counts.begin(), counts.end());
  return presence;
}

std::string pair_presence_csv(const PairPresence& presence) {
  std::ostringstream out;
  out << "exporter,importer,count\n";
  for (const auto& [pair, count] : presence.counts) {
    out << csv_field(presence.labels->exporters.label(pair.first)) << ','
        << csv_field(presence.labels->importers.label(pair.second)) << ',' << count << '\n';
  }
  return out.str();
}

}  // namespace gravity
