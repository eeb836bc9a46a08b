#pragma once

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "cryomap/stage.hpp"

namespace cryomap {

enum class CurveSource { MaterialReference, Manufacturer };

const char* curve_source_name(CurveSource s);  // "MATERIAL_REFERENCE" / "MANUFACTURER"

/// Tabulated thermal conductivity k(T). Inside the table k is interpolated
/// linearly in log-log space; below the first point it follows the line
/// through the two lowest points, floored at zero; above the last point it
/// is undefined.
struct MaterialCurve {
  std::string name;
  CurveSource source = CurveSource::MaterialReference;
  std::string note;
  std::vector<double> T;  // K, strictly increasing, > 0
  std::vector<double> k;  // W/(m K), finite, >= 0

  static constexpr const char* kExtrapolation = "low: linear through two lowest points, floor 0; high: none";

  /// Throws BadDocument when the table breaks the invariants.
  void validate() const;
  double t_min() const { return T.front(); }
  double t_max() const { return T.back(); }
};

/// Errors: InvalidArgument for T <= 0, OutOfDomain above the table.
double conductivity(const MaterialCurve& c, double T);

/// Integral of k(T) dT from T_lo to T_hi (W/m), T_hi > T_lo > 0. Composite
/// Simpson in ln T on each table segment (in T below the table), doubled
/// until the relative change falls below 1e-9. Errors: InvalidArgument,
/// OutOfDomain, SolveFailure after 24 doublings.
double conductivity_integral(const MaterialCurve& c, double T_lo, double T_hi);

struct ConductorLink {
  std::shared_ptr<const MaterialCurve> material;
  double area_m2 = 0.0;
  double length_m = 0.0;
  StageId hot_node = StageId::AMBIENT;
  StageId cold_node = StageId::PT1;
};

/// (A/L) * integral of k from T_C to T_H. Errors as conductivity_integral,
/// and InvalidArgument for a malformed link.
double conduction_load(const ConductorLink& link, double T_H, double T_C);

/// Reads a curve file: '#' header lines `name:`, `source:`, `note:`, then a
/// `T_K,k_W_mK` table.
MaterialCurve load_material_curve(const std::filesystem::path& path);
MaterialCurve parse_material_curve(const std::string& text, const std::string& fallback_name = {});

}  // namespace cryomap
