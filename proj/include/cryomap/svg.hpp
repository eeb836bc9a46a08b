#pragma once

#include <string>

#include "cryomap/capacity_map.hpp"
#include "cryomap/overhead.hpp"

namespace cryomap {

/// Self-contained SVG heatmap of a slice: one rectangle per grid node,
/// linear colour scale with a colour bar, hatched gap cells.
std::string heatmap_svg(const SliceTable& t, const std::string& title = {});

/// Admissible region shading with one legend entry per binding label.
std::string admissibility_svg(const AdmissibilityTable& t, const std::string& title = {});

}  // namespace cryomap
