#include "cryomap/equilibrium.hpp"

#include <algorithm>
#include <cmath>

#include <nlohmann/json.hpp>

#include "cryomap/error.hpp"

namespace cryomap {

namespace {

double rel_change(double now, double before) {
  if (now == before) return 0.0;
  return std::abs(now - before) / std::max(std::abs(now), std::abs(before));
}

QueryResult query_at(const CapacityMap& m, const LoadVector& q, unsigned iteration) {
  try {
    return m.query(q);
  } catch (const Error& e) {
    throw Error(e.code(),
                "payload incompatible with platform at iteration " + std::to_string(iteration) + ": " +
                    e.what(),
                e.stage());
  }
}

}  // namespace

void EquilibriumOptions::validate() const {
  if (!(damping > 0.0 && damping <= 1.0)) throw Error(ErrorCode::InvalidArgument, "damping must lie in (0, 1]");
  if (!(temperature_tolerance > 0.0 && load_tolerance > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "tolerances must be positive");
  }
  if (max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "max_iterations must be at least 1");
}

std::map<StageId, double> temperature_map(const PlatformState& s) {
  std::map<StageId, double> t;
  for (StageId st : kStages) t[st] = s.temperature(st);
  return t;
}

EquilibriumResult solve_equilibrium(const CapacityMap& m, const PayloadSpec& p,
                                    const EquilibriumOptions& opts) {
  opts.validate();
  const PlatformState base = query_at(m, LoadVector{}, 0).state;

  std::array<double, kStageCount> t{};
  for (StageId s : kStages) t[index(s)] = base.temperature(s);
  std::array<double, kStageCount> mapped_prev = t;
  LoadVector q_prev;

  EquilibriumResult r;
  for (unsigned k = 1; k <= opts.max_iterations; ++k) {
    std::map<StageId, double> temps;
    for (StageId s : kStages) temps[s] = t[index(s)];
    LoadVector q = aggregate_loads(p, temps, opts.ambient_K);
    PlatformState mapped = query_at(m, q, k).state;

    EquilibriumIteration it;
    it.q = q;
    for (StageId s : kStages) {
      const std::size_t i = index(s);
      it.max_rel_dT = std::max(it.max_rel_dT, rel_change(mapped.temperature(s), mapped_prev[i]));
      it.max_rel_dQ = std::max(it.max_rel_dQ, rel_change(q[s], q_prev[s]));
      t[i] = (1.0 - opts.damping) * t[i] + opts.damping * mapped.temperature(s);
      mapped_prev[i] = mapped.temperature(s);
    }
    it.temperatures = t;
    r.history.push_back(it);
    r.iterations = k;
    r.q = q;
    r.state = mapped;
    q_prev = q;

    if (it.max_rel_dT < opts.temperature_tolerance && it.max_rel_dQ < opts.load_tolerance) {
      // Accept only if q is consistent with the mapped temperatures as well.
      LoadVector check = aggregate_loads(p, temperature_map(mapped), opts.ambient_K);
      double dq = 0.0;
      for (StageId s : kStages) dq = std::max(dq, rel_change(check[s], q[s]));
      if (dq < opts.load_tolerance) {
        r.converged = true;
        break;
      }
    }
  }
  return r;
}

std::string equilibrium_report(const EquilibriumResult& r, const EquilibriumOptions& opts) {
  nlohmann::ordered_json j;
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  nlohmann::ordered_json loads, temps;
  for (StageId s : kStages) {
    loads[std::string(stage_name(s))] = r.q[s];
    temps[std::string(stage_name(s))] = r.state.temperature(s);
  }
  j["loads_W"] = loads;
  j["temperatures_K"] = temps;
  auto optional_field = [&](Field f) {
    double v = r.state[f];
    return std::isfinite(v) ? nlohmann::ordered_json(v) : nlohmann::ordered_json(nullptr);
  };
  j["p_condenser_Pa"] = optional_field(Field::P_COND);
  j["p_still_Pa"] = optional_field(Field::P_STILL);
  j["flow_mol_s"] = optional_field(Field::FLOW);
  j["options"] = {{"damping", opts.damping},
                  {"temperature_tolerance", opts.temperature_tolerance},
                  {"load_tolerance", opts.load_tolerance},
                  {"max_iterations", opts.max_iterations},
                  {"ambient_K", opts.ambient_K}};
  auto hist = nlohmann::ordered_json::array();
  for (const auto& it : r.history) {
    hist.push_back({{"max_rel_dT", it.max_rel_dT}, {"max_rel_dQ", it.max_rel_dQ}});
  }
  j["residual_history"] = hist;
  return j.dump(2) + "\n";
}

}  // namespace cryomap
