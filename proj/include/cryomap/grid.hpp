#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "cryomap/stage.hpp"

namespace cryomap {

struct Dataset;

/// Per-stage position on the grid axes. Collapsed axes always hold 0.
using NodeIndex = std::array<std::uint32_t, kStageCount>;

/// Rectilinear grid over load space. A cell is the hyper-rectangle between
/// adjacent axis values on every non-collapsed axis, identified by its lower
/// corner; it is valid iff all 2^k corners carry a record.
class GridIndex {
 public:
  GridIndex() = default;

  const std::vector<double>& axis(StageId s) const { return axes_[index(s)]; }
  bool collapsed(StageId s) const { return axes_[index(s)].size() <= 1; }
  const std::vector<StageId>& active_stages() const { return active_; }

  std::size_t node_count() const { return nodes_.size(); }
  std::optional<std::size_t> record_at(const NodeIndex& node) const;
  const NodeIndex& node_of_record(std::size_t record) const { return record_nodes_[record]; }

  /// Snaps every component to an axis value within kSnapTolerance.
  std::optional<NodeIndex> snap(const LoadVector& q) const;
  LoadVector load_at(const NodeIndex& node) const;

  std::size_t cell_count() const { return cell_count_; }
  std::size_t valid_cell_count() const { return valid_cells_; }
  std::size_t invalid_cell_count() const { return cell_count_ - valid_cells_; }
  /// `lower` is the cell's lower corner; false for indices off the grid.
  bool cell_valid(const NodeIndex& lower) const;

  friend GridIndex to_grid(const Dataset& d);

 private:
  std::uint64_t node_key(const NodeIndex& n) const;
  std::uint64_t cell_key(const NodeIndex& lower) const;

  std::array<std::vector<double>, kStageCount> axes_;
  std::vector<StageId> active_;
  std::unordered_map<std::uint64_t, std::uint32_t> nodes_;
  std::vector<NodeIndex> record_nodes_;
  std::vector<bool> cell_valid_;
  std::size_t cell_count_ = 0;
  std::size_t valid_cells_ = 0;
};

/// Builds axes from the sorted unique load values (1 µW snapping) and the
/// node map. Throws SnapCollision when two records land on one node.
GridIndex to_grid(const Dataset& d);

/// Groups sorted values whose distance to the group's first member is within
/// kSnapTolerance; returns the group representatives.
std::vector<double> cluster_axis(std::vector<double> values);

/// Index of the axis value within kSnapTolerance of v, if any.
std::optional<std::uint32_t> snap_to_axis(const std::vector<double>& axis, double v);

}  // namespace cryomap
