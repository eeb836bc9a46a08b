#pragma once

#include <map>
#include <memory>
#include <optional>
#include <vector>

#include "cryomap/dataset.hpp"
#include "cryomap/grid.hpp"

namespace cryomap {

enum class Containment { NodeExact, Interior, OnFace };

const char* containment_name(Containment c);

struct QueryResult {
  PlatformState state;
  Containment containment = Containment::NodeExact;
  NodeIndex cell{};  // lower corner of the enclosing cell (or the node itself)
};

/// Non-throwing query outcome, used by the search loops.
enum class QueryStatus { Ok, OutOfDomain, InvalidCell, CollapsedAxisMismatch };

/// Queryable capacity map: multilinear interpolation over valid cells of the
/// measurement grid. Never extrapolates. Immutable after build.
class CapacityMap {
 public:
  /// Errors: EmptyDataset, SnapCollision, and BadDocument when a node state
  /// has non-positive or non-finite temperatures.
  static CapacityMap build(const Dataset& d);

  const GridIndex& grid() const { return grid_; }
  const Dataset& dataset() const { return *dataset_; }
  bool has_field(Field f) const { return dataset_->has_field(f); }
  const PlatformState& node_state(std::size_t record) const {
    return dataset_->records[record].state;
  }

  /// Errors: OutOfDomain (names the stage), InvalidCell, CollapsedAxisMismatch.
  QueryResult query(const LoadVector& q) const;
  QueryStatus try_query(const std::array<double, kStageCount>& q, PlatformState& out) const;

  /// Interpolates inside one full cell at local coordinates t in [0,1] per
  /// non-collapsed axis (stage order). Cell must be valid.
  PlatformState evaluate_cell(const NodeIndex& lower, const std::array<double, kStageCount>& t) const;

  /// Min and max of a field over all populated nodes.
  std::pair<double, double> field_range(Field f) const;

  double axis_min(StageId s) const { return grid_.axis(s).front(); }
  double axis_max(StageId s) const { return grid_.axis(s).back(); }

 private:
  std::shared_ptr<const Dataset> dataset_;
  GridIndex grid_;
  std::array<std::pair<double, double>, kFieldCount> ranges_{};
};

inline CapacityMap build_map(const Dataset& d) { return CapacityMap::build(d); }

struct SliceSpec {
  StageId x = StageId::PT2;
  StageId y = StageId::PT1;
  LoadVector fixed;  // entries for x and y are ignored
  Field field = Field::T_STL;
};

/// Field values over the x/y axis nodes. values[iy * xs.size() + ix];
/// std::nullopt marks a gap where interpolation would need an invalid cell.
struct SliceTable {
  SliceSpec spec;
  std::vector<double> xs, ys;
  std::vector<std::optional<double>> values;

  const std::optional<double>& at(std::size_t ix, std::size_t iy) const {
    return values[iy * xs.size() + ix];
  }
  std::size_t gap_count() const;
};

SliceTable slice(const CapacityMap& m, const SliceSpec& s);

/// Delimited export with columns x_W, y_W, value (gaps written as "nan").
std::string slice_to_csv(const SliceTable& t);

/// Power on `stage` at which its interpolated temperature equals target_K,
/// with the other loads taken from `fixed`. Bisection on the 1-D profile to
/// 1 mW (PT stages) or 1 µW (sub-kelvin stages).
/// Errors: NotBracketed, NonMonotoneProfile, plus query errors for `fixed`.
double cooling_power_at(const CapacityMap& m, StageId stage, double target_K,
                        const LoadVector& fixed);

struct NodeDiff {
  LoadVector q;
  std::array<double, kFieldCount> delta{};  // b - a
  std::array<double, kFieldCount> pct{};    // 100 (b - a) / a
};

struct MapDiff {
  std::vector<NodeDiff> nodes;
  std::array<double, kFieldCount> mean_delta{};
  std::array<double, kFieldCount> mean_pct{};
  std::array<double, kFieldCount> max_abs_pct{};
  std::array<bool, kFieldCount> field_present{};
};

/// Per shared node differences b - a. Errors: NoSharedNodes.
MapDiff diff_maps(const CapacityMap& a, const CapacityMap& b);
std::string diff_to_csv(const MapDiff& d);

struct InferAlternative {
  LoadVector q;
  double residual = 0.0;
};

struct InferResult {
  LoadVector q;
  double residual = 0.0;  // weighted RMS over observed fields
  std::vector<InferAlternative> alternatives;
  bool non_unique = false;
  std::size_t evaluations = 0;
};

struct InferOptions {
  std::size_t starts = 8;
  /// Search stops once the pattern step falls below this fraction of each
  /// axis range.
  double step_tolerance = 1e-10;
  std::size_t max_evaluations_per_start = 40000;
};

/// Weighted inversion over the valid map domain. `observed` maps fields to
/// measured values (temperatures in K; circulation fields in SI). Missing
/// weights default to 1/observed for temperatures and 0 for circulation
/// fields. The objective is sum_i (w_i * (F_i(q) - obs_i))^2.
/// Errors: InvalidArgument (nothing observed / value outside the map range),
/// NoValidStart, NoImprovement.
InferResult infer_load(const CapacityMap& m, const std::map<Field, double>& observed,
                       const std::map<Field, double>& weights = {},
                       const InferOptions& opts = {});

InferResult infer_load(const CapacityMap& m, const std::map<StageId, double>& observed_K,
                       const std::map<StageId, double>& weights, std::size_t starts);

}  // namespace cryomap
