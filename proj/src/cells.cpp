#include "gravity/cells.hpp"

namespace gravity {

CellIndex::CellIndex(const GravityPanel& panel, Grouping grouping) : grouping_(grouping) {
  const LabelMaps& labels = panel.labels();
  std::size_t rows = 0, cols = 0;
  switch (grouping) {
    case Grouping::ExporterTime:
      rows = labels.exporters.size();
      cols = labels.periods.size();
      break;
    case Grouping::ImporterTime:
      rows = labels.importers.size();
      cols = labels.periods.size();
      break;
    case Grouping::Pair:
      rows = labels.exporters.size();
      cols = labels.importers.size();
      break;
  }

  // Dense table over the label universe, then compacted in key order.
  std::vector<std::int32_t> slot(rows * cols, -1);
  for (const ObsKey& key : panel.keys()) {
    const CellKey c = cell_of(key, grouping);
    slot[static_cast<std::size_t>(c.first) * cols + static_cast<std::size_t>(c.second)] = 0;
  }
  std::int32_t next = 0;
  for (std::size_t s = 0; s < slot.size(); ++s) {
    if (slot[s] < 0) continue;
    slot[s] = next++;
    keys_.push_back({static_cast<Index>(s / cols), static_cast<Index>(s % cols)});
  }
  cell_of_obs_.resize(panel.size());
  for (std::size_t k = 0; k < panel.size(); ++k) {
    const CellKey c = cell_of(panel.key(k), grouping);
    cell_of_obs_[k] = slot[static_cast<std::size_t>(c.first) * cols + static_cast<std::size_t>(c.second)];
  }
}

}  // namespace gravity
