#include "cryomap/grid.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "cryomap/dataset.hpp"
#include "cryomap/error.hpp"

namespace cryomap {

std::vector<double> cluster_axis(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  std::vector<double> out;
  for (double v : values) {
    if (out.empty() || v - out.back() > kSnapTolerance) out.push_back(v);
  }
  return out;
}

std::optional<std::uint32_t> snap_to_axis(const std::vector<double>& axis, double v) {
  auto it = std::lower_bound(axis.begin(), axis.end(), v - kSnapTolerance);
  std::optional<std::uint32_t> best;
  double best_dist = kSnapTolerance;
  for (; it != axis.end() && *it <= v + kSnapTolerance; ++it) {
    double dist = std::abs(*it - v);
    if (dist <= best_dist) {
      best_dist = dist;
      best = static_cast<std::uint32_t>(it - axis.begin());
    }
  }
  return best;
}

std::uint64_t GridIndex::node_key(const NodeIndex& n) const {
  std::uint64_t key = 0;
  for (std::size_t d = 0; d < kStageCount; ++d) key = key * axes_[d].size() + n[d];
  return key;
}

std::uint64_t GridIndex::cell_key(const NodeIndex& lower) const {
  std::uint64_t key = 0;
  for (StageId s : active_) {
    key = key * (axes_[index(s)].size() - 1) + lower[index(s)];
  }
  return key;
}

std::optional<std::size_t> GridIndex::record_at(const NodeIndex& node) const {
  auto it = nodes_.find(node_key(node));
  if (it == nodes_.end()) return std::nullopt;
  return it->second;
}

std::optional<NodeIndex> GridIndex::snap(const LoadVector& q) const {
  NodeIndex n{};
  for (StageId s : kStages) {
    auto i = snap_to_axis(axes_[index(s)], q[s]);
    if (!i) return std::nullopt;
    n[index(s)] = *i;
  }
  return n;
}

LoadVector GridIndex::load_at(const NodeIndex& node) const {
  std::array<double, kStageCount> w{};
  for (std::size_t d = 0; d < kStageCount; ++d) w[d] = axes_[d][node[d]];
  return LoadVector(w);
}

bool GridIndex::cell_valid(const NodeIndex& lower) const {
  for (StageId s : kStages) {
    std::size_t d = index(s);
    if (collapsed(s)) {
      if (lower[d] != 0) return false;
    } else if (lower[d] + 1 >= axes_[d].size()) {
      return false;
    }
  }
  if (active_.empty()) return false;
  return cell_valid_[cell_key(lower)];
}

GridIndex to_grid(const Dataset& d) {
  GridIndex g;
  for (StageId s : kStages) {
    std::vector<double> values;
    values.reserve(d.records.size());
    for (const auto& r : d.records) values.push_back(r.applied[s]);
    g.axes_[index(s)] = cluster_axis(std::move(values));
    if (g.axes_[index(s)].size() > 1) g.active_.push_back(s);
  }

  g.record_nodes_.reserve(d.records.size());
  g.nodes_.reserve(d.records.size());
  for (std::size_t r = 0; r < d.records.size(); ++r) {
    auto node = g.snap(d.records[r].applied);
    if (!node) {
      throw Error(ErrorCode::SnapCollision,
                  "record " + std::to_string(r) + " does not snap to the grid axes");
    }
    auto [it, inserted] = g.nodes_.emplace(g.node_key(*node), static_cast<std::uint32_t>(r));
    if (!inserted) {
      throw Error(ErrorCode::SnapCollision, "records " + std::to_string(it->second) + " and " +
                                                std::to_string(r) + " snap to the same node");
    }
    g.record_nodes_.push_back(*node);
  }

  if (g.active_.empty()) return g;

  g.cell_count_ = 1;
  for (StageId s : g.active_) g.cell_count_ *= g.axes_[index(s)].size() - 1;
  g.cell_valid_.assign(g.cell_count_, false);

  const std::size_t k = g.active_.size();
  for (const auto& node : g.record_nodes_) {
    bool is_lower = true;
    for (StageId s : g.active_) {
      if (node[index(s)] + 1 >= g.axes_[index(s)].size()) is_lower = false;
    }
    if (!is_lower) continue;
    bool complete = true;
    for (std::uint32_t mask = 1; mask < (1u << k) && complete; ++mask) {
      NodeIndex corner = node;
      for (std::size_t a = 0; a < k; ++a) {
        if (mask & (1u << a)) ++corner[index(g.active_[a])];
      }
      complete = g.nodes_.count(g.node_key(corner)) != 0;
    }
    if (complete) {
      g.cell_valid_[g.cell_key(node)] = true;
      ++g.valid_cells_;
    }
  }
  return g;
}

}  // namespace cryomap
