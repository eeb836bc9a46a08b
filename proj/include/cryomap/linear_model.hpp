#pragma once

#include <array>
#include <iosfwd>
#include <vector>

#include "cryomap/dataset.hpp"

namespace cryomap {

using StageArray = std::array<double, kStageCount>;

/// Linear interstage model dT = A * Q. Row i is the responding stage,
/// column j the loaded stage (K/W).
struct CouplingMatrix {
  std::array<StageArray, kStageCount> a{};
  StageArray t0{};          // baseline temperatures at zero load (K)
  StageArray fit_domain{};  // per-stage selection threshold (W)

  double operator()(StageId row, StageId col) const { return a[index(row)][index(col)]; }
};

/// Column j is the least-squares slope, through the zero-load baseline, of
/// every stage temperature against q_j over records where only stage j is
/// loaded at or below small_load_fraction * max(axis j).
CouplingMatrix fit_coupling(const Dataset& d, double small_load_fraction = 0.1);

StageArray predict_delta(const CouplingMatrix& m, const LoadVector& q);

struct ResidualRow {
  LoadVector q;
  StageArray err_K{};    // (T0 + A*Q) - measured
  StageArray err_pct{};  // relative to measured
};

struct ResidualTable {
  std::vector<ResidualRow> rows;
  StageArray max_abs_K{}, mean_abs_K{}, max_abs_pct{}, mean_abs_pct{};
};

ResidualTable residuals(const CouplingMatrix& m, const Dataset& d);

/// Delimited export: q_<stage>_W then err_<stage>_K and err_<stage>_pct.
void write_residual_table(const ResidualTable& t, std::ostream& out);

}  // namespace cryomap
