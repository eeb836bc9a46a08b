#include "cryomap/linear_model.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "cryomap/error.hpp"
#include "cryomap/table_io.hpp"

namespace cryomap {

namespace {

bool near_zero(double w) { return std::abs(w) <= kSnapTolerance; }

bool only_loaded(const LoadVector& q, StageId j) {
  for (StageId s : kStages) {
    if (s != j && !near_zero(q[s])) return false;
  }
  return true;
}

}  // namespace

CouplingMatrix fit_coupling(const Dataset& d, double small_load_fraction) {
  if (!(small_load_fraction > 0.0 && small_load_fraction <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "small_load_fraction must lie in (0, 1]");
  }
  const MeasurementRecord* baseline = nullptr;
  for (const auto& r : d.records) {
    if (r.applied.is_zero() ||
        std::all_of(kStages.begin(), kStages.end(), [&](StageId s) { return near_zero(r.applied[s]); })) {
      baseline = &r;
      break;
    }
  }
  if (!baseline) throw Error(ErrorCode::InsufficientData, "no zero-load record for the baseline");

  CouplingMatrix m;
  for (StageId s : kStages) m.t0[index(s)] = baseline->state.temperature(s);

  for (StageId j : kStages) {
    double max_axis = 0.0;
    for (const auto& r : d.records) max_axis = std::max(max_axis, r.applied[j]);
    const double threshold = small_load_fraction * max_axis;
    m.fit_domain[index(j)] = threshold;

    double sqq = 0.0;
    StageArray sqt{};
    std::size_t count = 0;
    for (const auto& r : d.records) {
      if (!only_loaded(r.applied, j) || r.applied[j] > threshold) continue;
      ++count;
      double q = r.applied[j];
      sqq += q * q;
      for (StageId i : kStages) sqt[index(i)] += q * (r.state.temperature(i) - m.t0[index(i)]);
    }
    if (count < 2) {
      throw Error(ErrorCode::InsufficientData,
                  "fewer than two single-stage records for " + std::string(stage_name(j)), j);
    }
    if (!(sqq > 0.0)) {
      throw Error(ErrorCode::RankDeficient,
                  "all selected " + std::string(stage_name(j)) + " powers are equal", j);
    }
    for (StageId i : kStages) m.a[index(i)][index(j)] = sqt[index(i)] / sqq;
    if (!(m.a[index(j)][index(j)] > 0.0)) {
      throw Error(ErrorCode::RankDeficient,
                  "fitted self-coupling of " + std::string(stage_name(j)) + " is not positive", j);
    }
  }
  return m;
}

StageArray predict_delta(const CouplingMatrix& m, const LoadVector& q) {
  StageArray dt{};
  for (std::size_t i = 0; i < kStageCount; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < kStageCount; ++j) acc += m.a[i][j] * q.values()[j];
    dt[i] = acc;
  }
  return dt;
}

ResidualTable residuals(const CouplingMatrix& m, const Dataset& d) {
  ResidualTable t;
  t.rows.reserve(d.records.size());
  for (const auto& r : d.records) {
    ResidualRow row;
    row.q = r.applied;
    auto dt = predict_delta(m, r.applied);
    for (std::size_t i = 0; i < kStageCount; ++i) {
      double measured = r.state.values[i];
      row.err_K[i] = (m.t0[i] + dt[i]) - measured;
      row.err_pct[i] = 100.0 * row.err_K[i] / measured;
      t.max_abs_K[i] = std::max(t.max_abs_K[i], std::abs(row.err_K[i]));
      t.max_abs_pct[i] = std::max(t.max_abs_pct[i], std::abs(row.err_pct[i]));
      t.mean_abs_K[i] += std::abs(row.err_K[i]);
      t.mean_abs_pct[i] += std::abs(row.err_pct[i]);
    }
    t.rows.push_back(row);
  }
  if (!t.rows.empty()) {
    for (std::size_t i = 0; i < kStageCount; ++i) {
      t.mean_abs_K[i] /= static_cast<double>(t.rows.size());
      t.mean_abs_pct[i] /= static_cast<double>(t.rows.size());
    }
  }
  return t;
}

void write_residual_table(const ResidualTable& t, std::ostream& out) {
  bool first = true;
  for (StageId s : kStages) {
    out << (first ? "" : ",") << "q_" << stage_token(s) << "_W";
    first = false;
  }
  for (StageId s : kStages) out << ",err_" << stage_token(s) << "_K";
  for (StageId s : kStages) out << ",err_" << stage_token(s) << "_pct";
  out << '\n';
  for (const auto& row : t.rows) {
    first = true;
    for (StageId s : kStages) {
      out << (first ? "" : ",") << io::format_double(row.q[s]);
      first = false;
    }
    for (double e : row.err_K) out << ',' << io::format_double(e);
    for (double e : row.err_pct) out << ',' << io::format_double(e);
    out << '\n';
  }
}

}  // namespace cryomap
