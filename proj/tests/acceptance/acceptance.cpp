#include <chrono>
#include <cstdio>
#include <cstring>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cryomap/capacity_map.hpp"
#include "cryomap/equilibrium.hpp"
#include "cryomap/linear_model.hpp"
#include "cryomap/overhead.hpp"
#include "cryomap/payload.hpp"
#include "cryomap/synthetic.hpp"
#include "oracle.hpp"
#include "support.hpp"

using namespace cryomap;
using cryomap::testing::rel_diff;

namespace {

/// Collects failed checks with a short reason each.
struct Check {
  std::vector<std::string> failures;
  std::ostringstream info;

  void expect(bool ok, const std::string& what) {
    if (!ok) failures.push_back(what);
  }
  template <class T>
  Check& note(const T& v) {
    info << v;
    return *this;
  }
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

const PayloadLibrary& library() {
  static const PayloadLibrary lib = load_library(default_data_dir());
  return lib;
}

std::map<StageId, double> base_temperatures() {
  return temperature_map(cryomap::testing::dense_map().query(LoadVector{}).state);
}

/// Width of the axis interval holding v (the nearest interval at an end).
double local_step(const std::vector<double>& axis, double v) {
  for (std::size_t i = 1; i < axis.size(); ++i) {
    if (v <= axis[i]) return axis[i] - axis[i - 1];
  }
  return axis.back() - axis[axis.size() - 2];
}

void conduction_integrals(Check& c) {
  auto flat = std::make_shared<MaterialCurve>();
  flat->T = {1, 400};
  flat->k = {1, 1};
  const double tc = 1e-12;
  double q = conduction_load({flat, 1e-6, 0.1, StageId::AMBIENT, StageId::PT1}, 300, tc);
  c.expect(rel_diff(q, 1e-5 * (300 - tc)) <= 1e-12, "constant k: " + fmt(q));

  auto linear = std::make_shared<MaterialCurve>();
  linear->T = {1, 100};
  linear->k = {1, 100};
  double q2 = conduction_load({linear, 1e-5, 1.0, StageId::PT1, StageId::PT2}, 40, 4);
  c.expect(rel_diff(q2, 7.92e-3) <= 1e-9, "k = T: " + fmt(q2));

  double worst = 0.0;
  std::size_t cases = 0;
  for (const auto& [name, m] : library().materials) {
    for (auto [a, b] : std::vector<std::pair<double, double>>{
             {m->t_min(), m->t_max()}, {32.0, 295.0}, {2.7, 32.0}, {0.72, 2.7}, {0.0073, 0.72}}) {
      double lib_v = conductivity_integral(*m, a, b);
      double oracle = cryomap::testing::oracle_integral(m->T, m->k, a, b);
      double e = rel_diff(lib_v, oracle);
      worst = std::max(worst, e);
      ++cases;
      c.expect(e <= 1e-6, name + " [" + fmt(a) + ", " + fmt(b) + "] rel " + fmt(e));
    }
  }
  c.note("constant k ").note(fmt(q)).note(" W, k=T ").note(fmt(q2)).note(" W, ").note(cases)
      .note(" oracle cases, worst rel ").note(fmt(worst));
}

void cable_sources(Check& c) {
  auto temps = base_temperatures();
  struct Spans {
    const char* cable;
    std::vector<SpanSegment> spans;
  };
  const std::vector<Spans> runs{
      {"SC219SS",
       {{StageId::AMBIENT, StageId::PT1, 0.134},
        {StageId::PT1, StageId::PT2, 0.201},
        {StageId::PT2, StageId::STL, 0.163},
        {StageId::STL, StageId::CLD, 0.163},
        {StageId::CLD, StageId::MXC, 0.236}}},
      {"SC219CN", {{StageId::AMBIENT, StageId::PT1, 0.134}, {StageId::PT1, StageId::PT2, 0.201}}},
      {"SC219NbTi",
       {{StageId::PT2, StageId::STL, 0.173},
        {StageId::STL, StageId::CLD, 0.171},
        {StageId::CLD, StageId::MXC, 0.246}}}};
  std::size_t spans = 0;
  double ss_top = 0.0;
  for (const auto& r : runs) {
    auto rows = compare_sources(library().cables.at(r.cable), r.spans, temps);
    for (const auto& row : rows) {
      ++spans;
      c.expect(row.material_W > row.manufacturer_W,
               std::string(r.cable) + " " + std::string(stage_name(row.segment.hot)) + "-" +
                   std::string(stage_name(row.segment.cold)) + ": material " + fmt(row.material_W) +
                   " <= manufacturer " + fmt(row.manufacturer_W));
    }
    if (std::string(r.cable) == "SC219SS") ss_top = rows[0].material_W;
  }
  const double target = 40.49e-3;
  c.expect(std::abs(ss_top - target) <= 0.35 * target, "stainless ambient span " + fmt(ss_top) + " W");
  c.note("stainless ambient span ").note(fmt(ss_top * 1e3)).note(" mW (target 40.49 mW), material > manufacturer on ")
      .note(spans).note(" spans");
}

void linear_model(Check& c) {
  // Exact linear data over single-stage sweeps.
  std::array<StageArray, kStageCount> a{};
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.05, 2.0);
  for (auto& row : a) {
    for (double& v : row) v = u(rng);
  }
  const StageArray t0{32.0, 2.7, 0.72, 0.085, 0.0073};
  auto linear = [&](const LoadVector& q) {
    PlatformState s;
    for (std::size_t i = 0; i < kStageCount; ++i) {
      s.values[i] = t0[i];
      for (std::size_t j = 0; j < kStageCount; ++j) s.values[i] += a[i][j] * q.values()[j];
    }
    return s;
  };
  Dataset d;
  MeasurementRecord zero;
  zero.state = linear(zero.applied);
  d.records.push_back(zero);
  for (StageId s : kStages) {
    for (double w : {0.001, 0.003, 0.01, 0.1}) {
      MeasurementRecord r;
      r.applied.set(s, w);
      r.state = linear(r.applied);
      d.records.push_back(r);
    }
  }
  finalize_dataset(d);
  auto m = fit_coupling(d, 0.1);
  double worst = 0.0;
  for (std::size_t i = 0; i < kStageCount; ++i) {
    for (std::size_t j = 0; j < kStageCount; ++j) worst = std::max(worst, rel_diff(m.a[i][j], a[i][j]));
  }
  c.expect(worst <= 1e-9, "linear recovery rel " + fmt(worst));
  c.note("linear recovery rel ").note(fmt(worst));

  // Nonlinear campaign: own-stage residual at full scale against small loads.
  const auto& dense = cryomap::testing::dense_dataset();
  auto fit = fit_coupling(dense, 0.1);
  auto res = residuals(fit, dense);
  for (StageId j : kStages) {
    const double top = dense.metadata.axes[index(j)].back();
    double full = 0.0, small = 0.0;
    for (std::size_t r = 0; r < dense.records.size(); ++r) {
      const auto& q = dense.records[r].applied;
      bool only_j = q[j] > 0.0;
      for (StageId s : kStages) only_j = only_j && (s == j || q[s] == 0.0);
      if (!only_j) continue;
      double e = std::abs(res.rows[r].err_K[index(j)]);
      if (q[j] == top) full = e;
      if (q[j] <= 0.1 * top) small = std::max(small, e);
    }
    c.expect(full >= 3.0 * small, std::string(stage_name(j)) + ": full " + fmt(full) + " K vs small " + fmt(small) + " K");
    c.note(", ").note(stage_name(j)).note(" full/small ").note(small > 0 ? fmt(full / small) : std::string("inf"));
  }
}

void interpolation(Check& c) {
  const auto& map = cryomap::testing::dense_map();
  const auto& d = map.dataset();
  double node_worst = 0.0;
  for (const auto& r : d.records) {
    auto s = map.query(r.applied).state;
    for (std::size_t f = 0; f < kFieldCount; ++f) node_worst = std::max(node_worst, rel_diff(s.values[f], r.state.values[f]));
  }
  c.expect(node_worst <= 1e-12, "node rel " + fmt(node_worst));

  const auto& g = map.grid();
  const auto& active = g.active_stages();
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::size_t bound_fail = 0, face_fail = 0, done = 0;
  double face_worst = 0.0;
  while (done < 10000) {
    NodeIndex lower{};
    for (StageId s : active) {
      std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(g.axis(s).size() - 2));
      lower[index(s)] = pick(rng);
    }
    if (!g.cell_valid(lower)) continue;
    ++done;
    std::array<double, kStageCount> t{}, q{};
    for (StageId s : active) t[index(s)] = unit(rng);
    for (StageId s : kStages) {
      const auto& ax = g.axis(s);
      q[index(s)] = g.collapsed(s) ? ax[0] : ax[lower[index(s)]] + t[index(s)] * (ax[lower[index(s)] + 1] - ax[lower[index(s)]]);
    }
    PlatformState st;
    if (map.try_query(q, st) != QueryStatus::Ok) {
      ++bound_fail;
      continue;
    }
    std::array<double, kFieldCount> lo, hi;
    lo.fill(INFINITY);
    hi.fill(-INFINITY);
    for (std::size_t corner = 0; corner < (std::size_t{1} << active.size()); ++corner) {
      NodeIndex n = lower;
      for (std::size_t k = 0; k < active.size(); ++k) n[index(active[k])] += (corner >> k) & 1u;
      const auto& cs = map.node_state(*g.record_at(n));
      for (std::size_t f = 0; f < kFieldCount; ++f) {
        lo[f] = std::min(lo[f], cs.values[f]);
        hi[f] = std::max(hi[f], cs.values[f]);
      }
    }
    for (std::size_t f = 0; f < kFieldCount; ++f) {
      double slack = 1e-12 * std::max(std::abs(lo[f]), std::abs(hi[f]));
      if (st.values[f] < lo[f] - slack || st.values[f] > hi[f] + slack) ++bound_fail;
    }

    // Face continuity: the shared face of this cell and its upper neighbour.
    StageId s = active[std::uniform_int_distribution<std::size_t>(0, active.size() - 1)(rng)];
    NodeIndex upper = lower;
    upper[index(s)] += 1;
    if (upper[index(s)] + 1 >= g.axis(s).size() || !g.cell_valid(upper)) continue;
    auto t_lo = t, t_hi = t;
    t_lo[index(s)] = 1.0;
    t_hi[index(s)] = 0.0;
    auto a = map.evaluate_cell(lower, t_lo), b = map.evaluate_cell(upper, t_hi);
    for (std::size_t f = 0; f < kFieldCount; ++f) {
      double e = rel_diff(a.values[f], b.values[f]);
      face_worst = std::max(face_worst, e);
      if (e > 1e-12) ++face_fail;
    }
  }
  c.expect(bound_fail == 0, std::to_string(bound_fail) + " bound violations");
  c.expect(face_fail == 0, std::to_string(face_fail) + " face mismatches");
  c.note(d.records.size()).note(" nodes worst rel ").note(fmt(node_worst)).note(", 10000 interior queries, face worst rel ")
      .note(fmt(face_worst));
}

void inverse(Check& c) {
  const auto& map = cryomap::testing::dense_map();
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> frac(0.05, 0.95);
  std::size_t misses = 0;
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    std::array<double, kStageCount> w{};
    for (StageId s : kStages) w[index(s)] = map.axis_min(s) + frac(rng) * (map.axis_max(s) - map.axis_min(s));
    LoadVector q(w);
    auto obs = map.query(q).state;
    auto r = infer_load(map, temperature_map(obs), {}, 8);
    bool ok = true;
    for (StageId s : kStages) {
      double e = std::abs(r.q[s] - q[s]) / q[s];
      worst = std::max(worst, e);
      ok = ok && e <= 0.01;
    }
    if (!ok) ++misses;
  }
  c.expect(misses == 0, std::to_string(misses) + " of 100 outside 1%");
  c.note(100 - misses).note("/100 recovered, worst per-stage rel ").note(fmt(worst));
}

void equilibrium(Check& c) {
  const auto& map = cryomap::testing::dense_map();
  auto p = load_payload(default_data_dir() / "payloads" / "reference.payload", library());
  EquilibriumOptions opts;
  opts.damping = 0.5;
  opts.temperature_tolerance = opts.load_tolerance = 1e-4;
  auto r = solve_equilibrium(map, p, opts);
  c.expect(r.converged && r.iterations <= 50, "reference payload: converged " + std::to_string(r.converged) +
                                                  " after " + std::to_string(r.iterations));
  auto q2 = aggregate_loads(p, temperature_map(r.state), opts.ambient_K);
  auto s2 = map.query(q2).state;
  double dq = 0.0, dt = 0.0;
  for (StageId s : kStages) {
    dq = std::max(dq, rel_diff(q2[s], r.q[s]));
    dt = std::max(dt, rel_diff(s2.temperature(s), r.state.temperature(s)));
  }
  c.expect(dq < opts.load_tolerance && dt < opts.temperature_tolerance,
           "extra round trip dQ " + fmt(dq) + " dT " + fmt(dt));

  auto e = solve_equilibrium(map, PayloadSpec{}, opts);
  c.expect(e.converged && e.iterations == 1, "empty payload took " + std::to_string(e.iterations));
  c.expect(e.state.values == map.query(LoadVector{}).state.values, "empty payload state differs from base");
  c.note(r.iterations).note(" iterations, round trip dQ ").note(fmt(dq)).note(" dT ").note(fmt(dt))
      .note(", empty payload ").note(e.iterations).note(" iteration");
}

void calibration(Check& c) {
  const auto& map = cryomap::testing::dense_map();
  struct Target {
    StageId stage;
    double T, P;
  };
  for (auto t : {Target{StageId::PT2, 4.4, 2.78}, Target{StageId::PT1, 36.0, 4.9}, Target{StageId::CLD, 0.2, 3.7e-3}}) {
    double p = cooling_power_at(map, t.stage, t.T, LoadVector{});
    double step = local_step(map.grid().axis(t.stage), p);
    c.expect(std::abs(p - t.P) <= step, std::string(stage_name(t.stage)) + " " + fmt(p) + " W");
    c.note(stage_name(t.stage)).note(" ").note(fmt(p)).note(" W at ").note(fmt(t.T)).note(" K (step ").note(fmt(step))
        .note("), ");
  }
  double base = map.query(LoadVector{}).state[Field::T_MXC];
  c.expect(base >= 0.0070 && base <= 0.0076, "base MXC " + fmt(base));
  c.note("base MXC ").note(fmt(base * 1e3)).note(" mK");
}

void headroom(Check& c) {
  const auto& map = cryomap::testing::dense_map();
  std::vector<double> found;
  for (double pt2 : {0.0, 1.84, 3.675}) {
    LoadVector fixed;
    fixed.set(StageId::PT2, pt2);
    auto r = max_stage_power(map, StageId::STL, fixed, {});
    found.push_back(r.admissible_max_W);
    c.note("PT2 ").note(fmt(pt2)).note(" W -> ").note(fmt(r.admissible_max_W * 1e3)).note(" mW (").note(r.binding).note("), ");
  }
  double step = local_step(map.grid().axis(StageId::STL), found[0]);
  c.expect(std::abs(found[0] - 0.1) <= step, "zero-PT2 headroom " + fmt(found[0]));
  c.expect(found[0] > found[1] && found[1] > found[2], "headroom not strictly decreasing");

  const auto& coarse = cryomap::testing::coarse_map();
  std::size_t compared = 0;
  for (StageId s : kStages) {
    for (StageId other : kStages) {
      if (other == s) continue;
      for (double v : coarse.grid().axis(other)) {
        LoadVector fixed;
        fixed.set(other, v);
        double b = max_stage_power(coarse, s, fixed, {}).admissible_max_W;
        double o = max_stage_power_scan(coarse, s, fixed, {});
        ++compared;
        c.expect(b == o, std::string(stage_name(s)) + " with " + std::string(stage_name(other)) + " " + fmt(v));
      }
    }
  }
  c.note("bisection = scan on ").note(compared).note(" coarse cases");
}

void limits(Check& c) {
  auto base = cryomap::testing::dense_map().query(LoadVector{}).state;
  auto stl = base;
  stl.set_temperature(StageId::STL, 1.2);
  auto v1 = check_limits(stl, {});
  c.expect(v1.size() == 1 && v1[0].quantity == Field::T_STL, "T_STL 1.2 K gave " + std::to_string(v1.size()));
  auto mxc = base;
  mxc.set_temperature(StageId::MXC, 0.035);
  auto v2 = check_limits(mxc, {});
  c.expect(v2.size() == 1 && v2[0].quantity == Field::T_MXC, "T_MXC 35 mK gave " + std::to_string(v2.size()));
  c.expect(check_limits(base, {}).empty(), "base state violates a limit");
  if (!v1.empty()) c.note(v1[0].describe());
  if (!v2.empty()) c.note("; ").note(v2[0].describe());
}

void round_trips(Check& c) {
  auto spec = CampaignSpec::coarse();
  auto noisy = SyntheticParams::defaults();
  noisy.noise_rel.fill(1e-3);
  auto d = run_campaign(noisy, spec);
  auto back = parse_dataset(serialize_table(d), serialize_metadata(d));
  bool exact = back.records.size() == d.records.size();
  for (std::size_t i = 0; exact && i < d.records.size(); ++i) {
    exact = back.records[i].applied == d.records[i].applied &&
            std::memcmp(back.records[i].state.values.data(), d.records[i].state.values.data(),
                        sizeof(double) * kFieldCount) == 0;
  }
  c.expect(exact, "parse/serialize numerics differ");

  auto clean = run_campaign(SyntheticParams::defaults(), spec);
  auto drift_spec = spec;
  drift_spec.drift = true;
  auto drifted = run_campaign(SyntheticParams::defaults(), drift_spec);
  auto fixed = correct_drift(drifted, StageId::PT1, SyntheticParams::defaults().pt1_drift_K_per_s, 0.0);
  double worst = 0.0;
  for (std::size_t i = 0; i < clean.records.size(); ++i) {
    for (StageId s : kStages) {
      worst = std::max(worst, std::abs(fixed.records[i].state.temperature(s) - clean.records[i].state.temperature(s)));
    }
  }
  c.expect(worst <= 1e-9, "drift restore error " + fmt(worst) + " K");

  auto again = run_campaign(noisy, spec);
  c.expect(serialize_table(again) == serialize_table(d) && serialize_metadata(again) == serialize_metadata(d),
           "same-seed campaigns differ");

  const auto& map = cryomap::testing::dense_map();
  auto diff = diff_maps(map, map);
  bool zero = !diff.nodes.empty();
  for (const auto& n : diff.nodes) {
    for (Field f : kFields) zero = zero && (!map.has_field(f) || (n.delta[index(f)] == 0.0 && n.pct[index(f)] == 0.0));
  }
  c.expect(zero, "self diff not zero");
  c.note(d.records.size()).note(" records bit exact, drift restore ").note(fmt(worst)).note(" K, ")
      .note(diff.nodes.size()).note(" self-diff nodes zero");
}

struct Criterion {
  const char* name;
  double budget_s;
  std::function<void(Check&)> body;
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"conduction integrals", 10, conduction_integrals},
      {"cable source ordering", 10, cable_sources},
      {"linear model recovery", 30, linear_model},
      {"interpolation exactness and convexity", 30, interpolation},
      {"inverse round trip", 300, inverse},
      {"equilibrium self-consistency", 60, equilibrium},
      {"calibration targets", 10, calibration},
      {"headroom semantics", 30, headroom},
      {"limit detection", 10, limits},
      {"round trips", 30, round_trips},
  };
  // Build the shared dense map outside the timed sections.
  cryomap::testing::dense_map();

  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& cr = criteria[i];
    Check c;
    auto t0 = std::chrono::steady_clock::now();
    try {
      cr.body(c);
    } catch (const std::exception& e) {
      c.failures.push_back(std::string("exception: ") + e.what());
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (secs > cr.budget_s) c.failures.push_back("took " + fmt(secs) + " s, budget " + fmt(cr.budget_s) + " s");
    bool ok = c.failures.empty();
    failed += ok ? 0 : 1;
    std::printf("[%s] %2zu %s (%.2f s): %s\n", ok ? "PASS" : "FAIL", i + 1, cr.name, secs, c.info.str().c_str());
    for (const auto& f : c.failures) std::printf("         - %s\n", f.c_str());
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
