#pragma once

#include <cmath>
#include <functional>
#include <vector>

#include "cryomap/capacity_map.hpp"
#include "cryomap/dataset.hpp"
#include "cryomap/synthetic.hpp"

namespace cryomap::testing {

inline double rel_diff(double a, double b) {
  if (a == b) return 0.0;
  return std::abs(a - b) / std::max(std::abs(a), std::abs(b));
}

/// Full-factorial dataset over the given axes with states from `f`.
inline Dataset factorial(const std::array<std::vector<double>, kStageCount>& axes,
                         const std::function<PlatformState(const LoadVector&)>& f) {
  Dataset d;
  std::size_t total = 1;
  for (const auto& a : axes) total *= a.size();
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::array<double, kStageCount> q{};
    std::size_t rest = flat;
    for (std::size_t s = kStageCount; s-- > 0;) {
      q[s] = axes[s][rest % axes[s].size()];
      rest /= axes[s].size();
    }
    MeasurementRecord r;
    r.applied = LoadVector(q);
    r.state = f(r.applied);
    d.records.push_back(r);
  }
  finalize_dataset(d);
  return d;
}

inline PlatformState synthetic(const LoadVector& q) { return synth_state(SyntheticParams::defaults(), q); }

inline const Dataset& dense_dataset() {
  static const Dataset d = run_campaign(SyntheticParams::defaults(), CampaignSpec::dense());
  return d;
}

inline const CapacityMap& dense_map() {
  static const CapacityMap m = CapacityMap::build(dense_dataset());
  return m;
}

inline const CapacityMap& coarse_map() {
  static const CapacityMap m =
      CapacityMap::build(run_campaign(SyntheticParams::defaults(), CampaignSpec::coarse()));
  return m;
}

}  // namespace cryomap::testing
