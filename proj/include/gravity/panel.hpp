#pragma once

#include <compare>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace gravity {

using Index = std::int32_t;

// (exporter i, importer j, period t) as dense indices into the panel's label
// tables.
struct ObsKey {
  Index exporter = 0;
  Index importer = 0;
  Index period = 0;

  auto operator<=>(const ObsKey&) const = default;
};

// Key of a fixed-effect cell: (i,t), (j,t) or (i,j) depending on the grouping.
struct CellKey {
  Index first = 0;
  Index second = 0;

  auto operator<=>(const CellKey&) const = default;
};

enum class Grouping { ExporterTime, ImporterTime, Pair };

inline CellKey cell_of(const ObsKey& key, Grouping grouping) {
  switch (grouping) {
    case Grouping::ExporterTime: return {key.exporter, key.period};
    case Grouping::ImporterTime: return {key.importer, key.period};
    case Grouping::Pair: break;
  }
  return {key.exporter, key.importer};
}

std::string_view to_string(Grouping grouping);

struct Observation {
  ObsKey key;
  double flow = 0.0;
  std::span<const double> covariates;
};

// Counted sizes of a panel. Nothing here is ever assumed from balancedness.
struct PanelDims {
  std::size_t n = 0;
  std::size_t p_alpha = 0;  // distinct (i,t)
  std::size_t p_gamma = 0;  // distinct (j,t)
  std::size_t p_eta = 0;    // distinct (i,j)
  std::size_t I = 0;
  std::size_t J = 0;
  std::size_t T = 0;

  bool operator==(const PanelDims&) const = default;
};

// Bijection between original identifiers and dense indices. Labels are kept in
// canonical order (numeric order if every label parses as a number, otherwise
// lexicographic) so that dense indices do not depend on row order.
class LabelTable {
 public:
  LabelTable() = default;
  static LabelTable from_labels(std::vector<std::string> labels);

  std::size_t size() const noexcept { return labels_.size(); }
  const std::string& label(Index index) const { return labels_.at(static_cast<std::size_t>(index)); }
  std::optional<Index> find(std::string_view label) const;
  const std::vector<std::string>& labels() const noexcept { return labels_; }

 private:
  std::vector<std::string> labels_;
  std::unordered_map<std::string, Index> lookup_;
};

struct LabelMaps {
  LabelTable exporters;
  LabelTable importers;
  LabelTable periods;
};

// Column names of the delimited input format. An empty covariate list means
// "every column not named by the other fields, in header order".
struct ColumnSchema {
  std::string exporter = "exporter";
  std::string importer = "importer";
  std::string period = "year";
  std::string flow = "trade";
  std::vector<std::string> covariates;
  char delimiter = ',';
};

// Immutable set of observations {(i, j, t, y, x)}. Storage is columnar; the
// label maps are shared between a panel and every panel derived from it.
class GravityPanel {
 public:
  GravityPanel() = default;

  // Validates: unique keys, indices within the label tables, flows finite and
  // nonnegative, covariates finite, covariates.size() == keys.size() * K.
  GravityPanel(std::shared_ptr<const LabelMaps> labels,
               std::vector<std::string> covariate_names,
               std::vector<ObsKey> keys, std::vector<double> flows,
               std::vector<double> covariates);

  std::size_t size() const noexcept { return keys_.size(); }
  bool empty() const noexcept { return keys_.empty(); }
  std::size_t num_covariates() const noexcept { return covariate_names_.size(); }

  const ObsKey& key(std::size_t k) const { return keys_[k]; }
  double flow(std::size_t k) const { return flows_[k]; }
  double covariate(std::size_t k, std::size_t c) const {
    return covariates_[k * num_covariates() + c];
  }
  std::span<const double> covariates(std::size_t k) const {
    return {covariates_.data() + k * num_covariates(), num_covariates()};
  }
  Observation observation(std::size_t k) const { return {key(k), flow(k), covariates(k)}; }

  std::span<const ObsKey> keys() const noexcept { return keys_; }
  std::span<const double> flows() const noexcept { return flows_; }
  // Row-major n x K.
  std::span<const double> covariate_matrix() const noexcept { return covariates_; }

  const std::vector<std::string>& covariate_names() const noexcept { return covariate_names_; }
  const LabelMaps& labels() const { return *labels_; }
  const std::shared_ptr<const LabelMaps>& shared_labels() const noexcept { return labels_; }

  const PanelDims& dims() const noexcept { return dims_; }

  // Same keys and covariates, new flow vector (validated).
  GravityPanel with_flows(std::vector<double> flows) const;

  std::string describe(const ObsKey& key) const;

 private:
  std::shared_ptr<const LabelMaps> labels_ = std::make_shared<LabelMaps>();
  std::vector<std::string> covariate_names_;
  std::vector<ObsKey> keys_;
  std::vector<double> flows_;
  std::vector<double> covariates_;
  PanelDims dims_;
};

GravityPanel load_panel(std::istream& source, const ColumnSchema& schema = {});
GravityPanel load_panel_file(const std::filesystem::path& path, const ColumnSchema& schema = {});

// Writes the panel in the same schema it is read with. Numbers are printed in
// shortest round-trip form, so a reload reproduces every double exactly.
void write_panel(std::ostream& out, const GravityPanel& panel, const ColumnSchema& schema = {});

// Throws EmptyPanelError on an empty panel.
PanelDims compute_dims(const GravityPanel& panel);

// Observations satisfying `keep`, in their original order. Throws
// EmptyPanelError if nothing is kept.
GravityPanel subset(const GravityPanel& panel, const std::function<bool(const ObsKey&)>& keep);
GravityPanel subset_mask(const GravityPanel& panel, std::span<const char> keep);

// Builds a panel from string-labelled rows, the in-memory analogue of
// load_panel. Used by generators and tests.
class PanelBuilder {
 public:
  explicit PanelBuilder(std::vector<std::string> covariate_names = {});
  PanelBuilder& add(std::string exporter, std::string importer, std::string period,
                    double flow, std::vector<double> covariates = {});
  GravityPanel build() const;

 private:
  struct Row {
    std::string exporter, importer, period;
    double flow;
    std::vector<double> covariates;
  };
  std::vector<std::string> covariate_names_;
  std::vector<Row> rows_;
};

// Shortest round-trip decimal representation of a double.
std::string format_double(double value);

}  // namespace gravity
