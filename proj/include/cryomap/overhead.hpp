#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "cryomap/capacity_map.hpp"

namespace cryomap {

struct OperationalLimits {
  std::array<std::optional<double>, kStageCount> max_temperature_K{
      std::nullopt, std::nullopt, 1.1, std::nullopt, 0.030};
  std::optional<double> max_p_still_Pa;
  std::optional<double> max_p_condenser_Pa;

  /// No limits at all.
  static OperationalLimits none();
  void validate() const;
};

struct LimitViolation {
  Field quantity;
  double value = 0.0;
  double threshold = 0.0;

  std::string describe() const;
};

/// One entry per exceeded limit, in field order. Absent circulation fields
/// (NaN) are not checked.
std::vector<LimitViolation> check_limits(const PlatformState& s, const OperationalLimits& lim);

struct HeadroomReport {
  StageId stage = StageId::STL;
  LoadVector fixed;
  double admissible_max_W = 0.0;
  /// Distance to the next axis node above the answer (0 at the domain edge).
  double grid_step_W = 0.0;
  /// Violated quantity name (e.g. "t_stl"), "INVALID_CELL" or "DOMAIN_EDGE".
  std::string binding;
  bool violated_at_minimum = false;
  bool used_exhaustive_scan = false;
  std::vector<std::string> notes;
};

/// Largest node on the stage axis such that it and every node below it can
/// be queried and satisfy the limits. Bisection over nodes once every
/// limited quantity is verified monotone along the axis (or never reaches
/// its limit there), otherwise an exhaustive scan.
/// Errors: InvalidArgument (collapsed axis), query errors for `fixed`.
HeadroomReport max_stage_power(const CapacityMap& m, StageId stage, const LoadVector& fixed,
                               const OperationalLimits& lim);

/// Exhaustive scan over the axis nodes, same semantics as max_stage_power.
double max_stage_power_scan(const CapacityMap& m, StageId stage, const LoadVector& fixed,
                            const OperationalLimits& lim);

struct AdmissibilityTable {
  StageId x = StageId::STL, y = StageId::MXC;
  std::vector<double> xs, ys;
  std::vector<bool> admissible;      // iy * xs.size() + ix
  std::vector<std::string> binding;  // "OK", quantity name or "INVALID_CELL"

  bool at(std::size_t ix, std::size_t iy) const { return admissible[iy * xs.size() + ix]; }
  const std::string& label(std::size_t ix, std::size_t iy) const { return binding[iy * xs.size() + ix]; }
};

AdmissibilityTable headroom_surface(const CapacityMap& m, StageId x, StageId y,
                                    const LoadVector& fixed, const OperationalLimits& lim);

std::string headroom_to_csv(const AdmissibilityTable& t);
std::string headroom_report_text(const HeadroomReport& r);

/// JSON limits document. Stages listed under "max_temperature_K" replace
/// the defaults (null removes a limit); unlisted stages keep them.
OperationalLimits parse_limits(const std::string& json_text);

}  // namespace cryomap
