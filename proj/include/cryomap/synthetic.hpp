#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cryomap/dataset.hpp"
#include "cryomap/overhead.hpp"

namespace cryomap {

/// Coefficients of the phenomenological platform model (SI units).
///   T1   = t1_0 + a1 q1 + c1 q1^2 + k12 q2
///   T2   = t2_0 + a2 q2 + c2 q2^2 + k21 (T1 - t1_0) + k2s q_stl
///   L F(T_stl) = q_stl + b_stl + H (1 - exp(-(T2 - t2_0) / x0)),
///        F(T) = (b_stl / L) (T / ts0)^n            (flow, mol/s)
///   T_cld = T_mxc + w (T_stl - T_mxc) + r1 q_cld / (1 + q_cld / qsat)
///   F (95 T_mxc^2 - 11 (xi T_cld)^2) = q_mxc + b_mxc
///   p_still = ps0 + ps1 F,  p_cond = pc0 + pc1 F (T2 / t2_0)^2
struct SyntheticParams {
  double t1_0 = 32.0, a1 = 0.7, c1 = 0.023740108288213234, k12 = 0.25;
  double t2_0 = 2.70, a2 = 0.4, c2 = 0.07518373790176498, k21 = 0.01, k2s = 0.5;
  double L = 40.0, b_stl = 0.024, ts0 = 0.72, n = 4.120743615202291;
  double H = 0.10366473631516859, x0 = 0.4765739384449202;
  double w = 0.10902204117571884, r1 = 36.18847428749531, qsat = 0.020;
  double xi = 0.1, b_mxc = 2.5606718310414088e-06;
  double ps0 = 5.0, ps1 = 2e4, pc0 = 2e4, pc1 = 5e6;
  /// Relative Gaussian noise amplitude per field.
  std::array<double, kFieldCount> noise_rel{};
  /// PT1 drift applied by campaigns with drift enabled (K/s).
  double pt1_drift_K_per_s = 1e-8;

  static SyntheticParams defaults() { return {}; }
  /// Throws InvalidArgument when a monotonicity-critical coefficient is not
  /// positive.
  void validate() const;
};

/// Errors: InvalidArgument for bad loads, SolveFailure when a sub-solve
/// cannot bracket its root.
PlatformState synth_state(const SyntheticParams& p, const LoadVector& q);

/// Full-factorial block of axis values (W) per stage.
struct SubGrid {
  std::array<std::vector<double>, kStageCount> values;
};

struct CampaignSpec {
  std::string name = "custom";
  std::vector<SubGrid> subgrids;
  std::uint64_t seed = 1;
  bool drift = false;
  double time_step_s = 7800.0;
  double averaging_window_s = 600.0;
  /// Records violating these pseudo-limits are flagged LIMIT_TRUNCATED, or
  /// dropped when drop_truncated is set.
  std::optional<OperationalLimits> truncate;
  bool drop_truncated = false;

  static CampaignSpec dense();
  static CampaignSpec sparse();
  static CampaignSpec coarse();
  /// "dense", "sparse" or "coarse". Throws InvalidArgument otherwise.
  static CampaignSpec preset(const std::string& name);
  void validate() const;
};

/// Records sorted by load coordinates, timestamps t = i * time_step_s.
Dataset run_campaign(const SyntheticParams& p, const CampaignSpec& spec);

/// JSON documents; unspecified keys keep their defaults.
SyntheticParams parse_params(const std::string& json_text);
CampaignSpec parse_campaign(const std::string& json_text);

}  // namespace cryomap
