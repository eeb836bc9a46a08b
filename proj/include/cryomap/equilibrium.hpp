#pragma once

#include <string>
#include <vector>

#include "cryomap/capacity_map.hpp"
#include "cryomap/payload.hpp"

namespace cryomap {

struct EquilibriumOptions {
  double damping = 0.5;  // alpha in (0, 1]
  double temperature_tolerance = 1e-4;  // relative
  double load_tolerance = 1e-4;         // relative
  unsigned max_iterations = 100;
  double ambient_K = 295.0;

  void validate() const;
};

struct EquilibriumIteration {
  LoadVector q;
  std::array<double, kStageCount> temperatures{};  // damped iterate after this step
  double max_rel_dT = 0.0;
  double max_rel_dQ = 0.0;
};

struct EquilibriumResult {
  LoadVector q;
  PlatformState state;  // full interpolated state at q
  unsigned iterations = 0;
  bool converged = false;
  std::vector<EquilibriumIteration> history;
};

/// Damped fixed-point iteration T <- (1 - a) T + a T(query(aggregate(T))).
/// Errors: OutOfDomain / InvalidCell naming the stage and iteration when a
/// load vector leaves the map. Non-convergence is reported, not thrown.
EquilibriumResult solve_equilibrium(const CapacityMap& m, const PayloadSpec& p,
                                    const EquilibriumOptions& opts = {});

std::map<StageId, double> temperature_map(const PlatformState& s);

/// JSON report: loads, temperatures, circulation fields, diagnostics.
std::string equilibrium_report(const EquilibriumResult& r, const EquilibriumOptions& opts);

}  // namespace cryomap
