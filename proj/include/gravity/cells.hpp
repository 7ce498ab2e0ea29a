#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gravity/panel.hpp"

namespace gravity {

// Compact numbering of the cells of one fixed-effect grouping that actually
// occur in a panel. Cell ids follow the ordering of CellKey, so they do not
// depend on observation order.
class CellIndex {
 public:
  CellIndex() = default;
  CellIndex(const GravityPanel& panel, Grouping grouping);

  Grouping grouping() const noexcept { return grouping_; }
  std::size_t num_cells() const noexcept { return keys_.size(); }
  std::int32_t cell(std::size_t obs) const { return cell_of_obs_[obs]; }
  std::span<const std::int32_t> cells() const noexcept { return cell_of_obs_; }
  const CellKey& key(std::int32_t cell) const { return keys_[static_cast<std::size_t>(cell)]; }
  std::span<const CellKey> keys() const noexcept { return keys_; }

 private:
  Grouping grouping_ = Grouping::Pair;
  std::vector<std::int32_t> cell_of_obs_;
  std::vector<CellKey> keys_;
};

// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double value) noexcept {
    const double t = sum_ + value;
    if ((sum_ >= 0 ? sum_ : -sum_) >= (value >= 0 ? value : -value)) {
      compensation_ += (sum_ - t) + value;
    } else {
      compensation_ += (value - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

}  // namespace gravity
