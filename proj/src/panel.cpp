#include "gravity/panel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "gravity/error.hpp"

namespace gravity {

namespace {

std::optional<double> parse_double(std::string_view text) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t')) text.remove_suffix(1);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  return value;
}

// Splits one delimited record. Double quotes protect delimiters; "" inside a
// quoted field is an escaped quote.
std::vector<std::string> split_record(std::string_view line, char delimiter) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t pos = 0; pos < line.size(); ++pos) {
    const char c = line[pos];
    if (quoted) {
      if (c == '"') {
        if (pos + 1 < line.size() && line[pos + 1] == '"') {
          field.push_back('"');
          ++pos;
        } else {
          quoted = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == delimiter) {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field.push_back(c);
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

std::string quote_if_needed(const std::string& field, char delimiter) {
  if (field.find(delimiter) == std::string::npos && field.find('"') == std::string::npos &&
      field.find('\n') == std::string::npos) {
    return field;
  }
  std::string quoted = "\"";
  for (char c : field) {
    if (c == '"') quoted.push_back('"');
    quoted.push_back(c);
  }
  quoted.push_back('"');
  return quoted;
}

PanelDims count_dims(const LabelMaps& labels, std::span<const ObsKey> keys) {
  PanelDims dims;
  dims.n = keys.size();
  const std::size_t n_exp = labels.exporters.size();
  const std::size_t n_imp = labels.importers.size();
  const std::size_t n_per = labels.periods.size();
  std::vector<char> seen_it(n_exp * n_per), seen_jt(n_imp * n_per), seen_ij(n_exp * n_imp);
  std::vector<char> seen_i(n_exp), seen_j(n_imp), seen_t(n_per);
  auto mark = [](std::vector<char>& seen, std::size_t slot, std::size_t& count) {
    if (!seen[slot]) {
      seen[slot] = 1;
      ++count;
    }
  };
  for (const ObsKey& key : keys) {
    const auto i = static_cast<std::size_t>(key.exporter);
    const auto j = static_cast<std::size_t>(key.importer);
    const auto t = static_cast<std::size_t>(key.period);
    mark(seen_it, i * n_per + t, dims.p_alpha);
    mark(seen_jt, j * n_per + t, dims.p_gamma);
    mark(seen_ij, i * n_imp + j, dims.p_eta);
    mark(seen_i, i, dims.I);
    mark(seen_j, j, dims.J);
    mark(seen_t, t, dims.T);
  }
  return dims;
}

}  // namespace

std::string_view to_string(Grouping grouping) {
  switch (grouping) {
    case Grouping::ExporterTime: return "exporter-time";
    case Grouping::ImporterTime: return "importer-time";
    case Grouping::Pair: break;
  }
  return "pair";
}

std::string format_double(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) return "nan";
  return std::string(buffer, ptr);
}

// ---------------------------------------------------------------------------
// LabelTable

LabelTable LabelTable::from_labels(std::vector<std::string> labels) {
  std::sort(labels.begin(), labels.end());
  labels.erase(std::unique(labels.begin(), labels.end()), labels.end());

  const bool numeric = !labels.empty() && std::all_of(labels.begin(), labels.end(), [](const std::string& s) {
    return parse_double(s).has_value();
  });
  if (numeric) {
    std::stable_sort(labels.begin(), labels.end(), [](const std::string& a, const std::string& b) {
      return *parse_double(a) < *parse_double(b);
    });
  }

  LabelTable table;
  table.labels_ = std::move(labels);
  table.lookup_.reserve(table.labels_.size());
  for (std::size_t k = 0; k < table.labels_.size(); ++k) {
    table.lookup_.emplace(table.labels_[k], static_cast<Index>(k));
  }
  return table;
}

std::optional<Index> LabelTable::find(std::string_view label) const {
  auto it = lookup_.find(std::string(label));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// GravityPanel

GravityPanel::GravityPanel(std::shared_ptr<const LabelMaps> labels,
                           std::vector<std::string> covariate_names,
                           std::vector<ObsKey> keys, std::vector<double> flows,
                           std::vector<double> covariates)
    : labels_(std::move(labels)),
      covariate_names_(std::move(covariate_names)),
      keys_(std::move(keys)),
      flows_(std::move(flows)),
      covariates_(std::move(covariates)) {
  if (!labels_) throw DataError("panel constructed without label maps");
  if (flows_.size() != keys_.size()) throw DataError("flow column length differs from key count");
  if (covariates_.size() != keys_.size() * covariate_names_.size()) {
    throw DataError("covariate matrix is ragged: expected " +
                    std::to_string(keys_.size() * covariate_names_.size()) + " entries, got " +
                    std::to_string(covariates_.size()));
  }

  const auto n_exp = static_cast<std::uint64_t>(labels_->exporters.size());
  const auto n_imp = static_cast<std::uint64_t>(labels_->importers.size());
  const auto n_per = static_cast<std::uint64_t>(labels_->periods.size());
  for (std::size_t k = 0; k < keys_.size(); ++k) {
    const ObsKey& key = keys_[k];
    if (key.exporter < 0 || static_cast<std::uint64_t>(key.exporter) >= n_exp ||
        key.importer < 0 || static_cast<std::uint64_t>(key.importer) >= n_imp ||
        key.period < 0 || static_cast<std::uint64_t>(key.period) >= n_per) {
      throw DataError("observation index outside label tables", static_cast<long>(k + 1));
    }
    if (!std::isfinite(flows_[k]) || flows_[k] < 0.0) {
      throw DataError("flow must be finite and nonnegative", static_cast<long>(k + 1));
    }
  }
  for (std::size_t e = 0; e < covariates_.size(); ++e) {
    if (!std::isfinite(covariates_[e])) {
      throw DataError("covariate must be finite", static_cast<long>(e / covariate_names_.size() + 1));
    }
  }

  // Duplicate keys.
  auto encode = [&](const ObsKey& key) {
    return (static_cast<std::uint64_t>(key.exporter) * n_imp + static_cast<std::uint64_t>(key.importer)) * n_per +
           static_cast<std::uint64_t>(key.period);
  };
  const std::uint64_t universe = n_exp * n_imp * n_per;
  if (universe <= (std::uint64_t{1} << 26)) {
    std::vector<bool> seen(universe);
    for (std::size_t k = 0; k < keys_.size(); ++k) {
      const auto code = encode(keys_[k]);
      if (seen[code]) throw DataError("duplicate observation " + describe(keys_[k]), static_cast<long>(k + 1));
      seen[code] = true;
    }
  } else {
    std::vector<std::size_t> order(keys_.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys_[a] < keys_[b]; });
    for (std::size_t k = 1; k < order.size(); ++k) {
      if (keys_[order[k]] == keys_[order[k - 1]]) {
        throw DataError("duplicate observation " + describe(keys_[order[k]]),
                        static_cast<long>(std::max(order[k], order[k - 1]) + 1));
      }
    }
  }

  dims_ = count_dims(*labels_, keys_);
}

GravityPanel GravityPanel::with_flows(std::vector<double> flows) const {
  return GravityPanel(labels_, covariate_names_, keys_, std::move(flows), covariates_);
}

std::string GravityPanel::describe(const ObsKey& key) const {
  return "(exporter=" + labels_->exporters.label(key.exporter) +
         ", importer=" + labels_->importers.label(key.importer) +
         ", period=" + labels_->periods.label(key.period) + ")";
}

// ---------------------------------------------------------------------------
// I/O

GravityPanel load_panel(std::istream& source, const ColumnSchema& schema) {
  std::string line;
  auto next_line = [&]() -> bool {
    while (std::getline(source, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (!line.empty()) return true;
    }
    return false;
  };

  if (!next_line()) throw DataError("input has no header row");
  const std::vector<std::string> header = split_record(line, schema.delimiter);

  auto column = [&](const std::string& name) -> std::size_t {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw DataError("missing column '" + name + "' in header");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t exp_col = column(schema.exporter);
  const std::size_t imp_col = column(schema.importer);
  const std::size_t per_col = column(schema.period);
  const std::size_t flow_col = column(schema.flow);

  std::vector<std::size_t> cov_cols;
  std::vector<std::string> cov_names;
  if (schema.covariates.empty()) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      if (c != exp_col && c != imp_col && c != per_col && c != flow_col) {
        cov_cols.push_back(c);
        cov_names.push_back(header[c]);
      }
    }
  } else {
    for (const auto& name : schema.covariates) {
      cov_cols.push_back(column(name));
      cov_names.push_back(name);
    }
  }

  std::vector<std::string> exp_raw, imp_raw, per_raw;
  std::vector<double> flows, covariates;
  long row = 0;
  while (next_line()) {
    ++row;
    const auto fields = split_record(line, schema.delimiter);
    if (fields.size() != header.size()) {
      throw DataError("ragged row: expected " + std::to_string(header.size()) + " fields, got " +
                          std::to_string(fields.size()),
                      row);
    }
    const auto flow = parse_double(fields[flow_col]);
    if (!flow) throw DataError("non-numeric flow '" + fields[flow_col] + "'", row);
    if (!std::isfinite(*flow) || *flow < 0.0) throw DataError("flow must be finite and nonnegative", row);
    flows.push_back(*flow);
    for (std::size_t c : cov_cols) {
      const auto value = parse_double(fields[c]);
      if (!value || !std::isfinite(*value)) {
        throw DataError("non-numeric covariate '" + header[c] + "' value '" + fields[c] + "'", row);
      }
      covariates.push_back(*value);
    }
    exp_raw.push_back(fields[exp_col]);
    imp_raw.push_back(fields[imp_col]);
    per_raw.push_back(fields[per_col]);
  }

  auto maps = std::make_shared<LabelMaps>();
  maps->exporters = LabelTable::from_labels(exp_raw);
  maps->importers = LabelTable::from_labels(imp_raw);
  maps->periods = LabelTable::from_labels(per_raw);

  std::vector<ObsKey> keys(flows.size());
  for (std::size_t k = 0; k < keys.size(); ++k) {
    keys[k] = {*maps->exporters.find(exp_raw[k]), *maps->importers.find(imp_raw[k]),
               *maps->periods.find(per_raw[k])};
  }
  return GravityPanel(std::move(maps), std::move(cov_names), std::move(keys), std::move(flows),
                      std::move(covariates));
}

GravityPanel load_panel_file(const std::filesystem::path& path, const ColumnSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open input file '" + path.string() + "'");
  return load_panel(in, schema);
}

void write_panel(std::ostream& out, const GravityPanel& panel, const ColumnSchema& schema) {
  const char d = schema.delimiter;
  out << quote_if_needed(schema.exporter, d) << d << quote_if_needed(schema.importer, d) << d
      << quote_if_needed(schema.period, d) << d << quote_if_needed(schema.flow, d);
  for (const auto& name : panel.covariate_names()) out << d << quote_if_needed(name, d);
  out << '\n';
  const LabelMaps& labels = panel.labels();
  for (std::size_t k = 0; k < panel.size(); ++k) {
    const ObsKey& key = panel.key(k);
    out << quote_if_needed(labels.exporters.label(key.exporter), d) << d
        << quote_if_needed(labels.importers.label(key.importer), d) << d
        << quote_if_needed(labels.periods.label(key.period), d) << d << format_double(panel.flow(k));
    for (double x : panel.covariates(k)) out << d << format_double(x);
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Dims and subsets

PanelDims compute_dims(const GravityPanel& panel) {
  if (panel.empty()) throw EmptyPanelError("panel has no observations");
  return count_dims(panel.labels(), panel.keys());
}

GravityPanel subset_mask(const GravityPanel& panel, std::span<const char> keep) {
  if (keep.size() != panel.size()) throw DataError("subset mask length differs from panel size");
  std::vector<ObsKey> keys;
  std::vector<double> flows, covariates;
  for (std::size_t k = 0; k < panel.size(); ++k) {
    if (!keep[k]) continue;
    keys.push_back(panel.key(k));
    flows.push_back(panel.flow(k));
    const auto x = panel.covariates(k);
    covariates.insert(covariates.end(), x.begin(), x.end());
  }
  if (keys.empty()) throw EmptyPanelError("subset is empty");
  return GravityPanel(panel.shared_labels(), panel.covariate_names(), std::move(keys), std::move(flows),
                      std::move(covariates));
}

GravityPanel subset(const GravityPanel& panel, const std::function<bool(const ObsKey&)>& keep) {
  std::vector<char> mask(panel.size());
  for (std::size_t k = 0; k < panel.size(); ++k) mask[k] = keep(panel.key(k)) ? 1 : 0;
  return subset_mask(panel, mask);
}

// ---------------------------------------------------------------------------
// PanelBuilder

PanelBuilder::PanelBuilder(std::vector<std::string> covariate_names)
    : covariate_names_(std::move(covariate_names)) {}

PanelBuilder& PanelBuilder::add(std::string exporter, std::string importer, std::string period,
                                double flow, std::vector<double> covariates) {
  if (covariates.size() != covariate_names_.size()) {
    throw DataError("ragged covariates: expected " + std::to_string(covariate_names_.size()) + ", got " +
                        std::to_string(covariates.size()),
                    static_cast<long>(rows_.size() + 1));
  }
  rows_.push_back({std::move(exporter), std::move(importer), std::move(period), flow, std::move(covariates)});
  return *this;
}

GravityPanel PanelBuilder::build() const {
  std::vector<std::string> exp_raw, imp_raw, per_raw;
  for (const Row& row : rows_) {
    exp_raw.push_back(row.exporter);
    imp_raw.push_back(row.importer);
    per_raw.push_back(row.period);
  }
  auto maps = std::make_shared<LabelMaps>();
  maps->exporters = LabelTable::from_labels(std::move(exp_raw));
  maps->importers = LabelTable::from_labels(std::move(imp_raw));
  maps->periods = LabelTable::from_labels(std::move(per_raw));

  std::vector<ObsKey> keys;
  std::vector<double> flows, covariates;
  for (const Row& row : rows_) {
    keys.push_back({*maps->exporters.find(row.exporter), *maps->importers.find(row.importer),
                    *maps->periods.find(row.period)});
    flows.push_back(row.flow);
    covariates.insert(covariates.end(), row.covariates.begin(), row.covariates.end());
  }
  return GravityPanel(std::move(maps), covariate_names_, std::move(keys), std::move(flows), std::move(covariates));
}

}  // namespace gravity
