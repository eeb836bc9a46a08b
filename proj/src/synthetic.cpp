#include "cryomap/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include <nlohmann/json.hpp>

#include "cryomap/error.hpp"

namespace cryomap {

namespace {

// Bisection for an increasing g on [lo, hi] to 1e-13 relative.
template <class G>
double solve_increasing(G&& g, double lo, double hi, const char* what) {
  double glo = g(lo), ghi = g(hi);
  if (!(glo <= 0.0 && ghi >= 0.0)) {
    throw Error(ErrorCode::SolveFailure, std::string("synthetic model cannot bracket ") + what);
  }
  for (int i = 0; i < 400 && hi - lo > 1e-13 * hi; ++i) {
    double mid = 0.5 * (lo + hi);
    if (g(mid) < 0.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

std::vector<double> milli(std::initializer_list<double> v, double scale) {
  std::vector<double> out;
  for (double x : v) out.push_back(x * scale);
  return out;
}

}  // namespace

void SyntheticParams::validate() const {
  for (double v : {a1, a2, L, b_stl, ts0, n, x0, r1, qsat, w, b_mxc}) {
    if (!(v > 0.0)) throw Error(ErrorCode::InvalidArgument, "synthetic coefficients must be positive");
  }
  for (double v : {c1, c2, k12, k21, k2s, H, xi, ps1, pc1}) {
    if (!(v >= 0.0)) throw Error(ErrorCode::InvalidArgument, "synthetic coupling coefficients must be non-negative");
  }
  if (!(w < 1.0)) throw Error(ErrorCode::InvalidArgument, "cold-plate weight must be below 1");
  for (double v : noise_rel) {
    if (!(v >= 0.0)) throw Error(ErrorCode::InvalidArgument, "noise amplitudes must be non-negative");
  }
}

PlatformState synth_state(const SyntheticParams& p, const LoadVector& q) {
  const double q1 = q[StageId::PT1], q2 = q[StageId::PT2], qs = q[StageId::STL];
  const double qc = q[StageId::CLD], qm = q[StageId::MXC];
  PlatformState s;
  const double t1 = p.t1_0 + p.a1 * q1 + p.c1 * q1 * q1 + p.k12 * q2;
  const double t2 = p.t2_0 + p.a2 * q2 + p.c2 * q2 * q2 + p.k21 * (t1 - p.t1_0) + p.k2s * qs;

  const double f_ref = p.b_stl / p.L;
  auto flow_at = [&](double t) { return f_ref * std::pow(t / p.ts0, p.n); };
  const double still_load = qs + p.b_stl + p.H * (1.0 - std::exp(-(t2 - p.t2_0) / p.x0));
  const double ts = solve_increasing([&](double t) { return p.L * flow_at(t) - still_load; }, 1e-4, 50.0,
                                     "the still temperature");
  const double flow = flow_at(ts);

  const double cld_rise = p.r1 * qc / (1.0 + qc / p.qsat);
  auto t_cld = [&](double tm) { return tm + p.w * (ts - tm) + cld_rise; };
  const double tm = solve_increasing(
      [&](double t) {
        double xc = p.xi * t_cld(t);
        return flow * (95.0 * t * t - 11.0 * xc * xc) - (qm + p.b_mxc);
      },
      1e-7, ts, "the mixing-chamber temperature");

  s.set_temperature(StageId::PT1, t1);
  s.set_temperature(StageId::PT2, t2);
  s.set_temperature(StageId::STL, ts);
  s.set_temperature(StageId::CLD, t_cld(tm));
  s.set_temperature(StageId::MXC, tm);
  s[Field::FLOW] = flow;
  s[Field::P_STILL] = p.ps0 + p.ps1 * flow;
  s[Field::P_COND] = p.pc0 + p.pc1 * flow * (t2 / p.t2_0) * (t2 / p.t2_0);
  return s;
}

CampaignSpec CampaignSpec::dense() {
  CampaignSpec c;
  c.name = "dense";
  SubGrid g;
  g.values[0] = {0, 1, 2, 3.5, 5, 7.5, 12, 19.4};
  g.values[1] = {0, 0.2, 0.92, 1.84, 2.3, 2.76, 3.22, 3.675, 4.26};
  g.values[2] = milli({0, 2, 4, 6, 8, 10, 12, 15, 20, 25, 30, 40, 55, 70, 85, 100, 110, 120}, 1e-3);
  g.values[3] = milli({0, 0.5, 1, 2, 3, 4.61, 7, 10, 14.5}, 1e-3);
  g.values[4] = milli({0, 2, 5, 10, 20, 40, 60}, 1e-6);
  c.subgrids.push_back(g);
  return c;
}

CampaignSpec CampaignSpec::coarse() {
  CampaignSpec c;
  c.name = "coarse";
  SubGrid g;
  g.values[0] = {0, 5, 12};
  g.values[1] = {0, 1.84, 3.675};
  g.values[2] = milli({0, 10, 25, 55, 100, 120}, 1e-3);
  g.values[3] = milli({0, 4, 10}, 1e-3);
  g.values[4] = milli({0, 20, 60}, 1e-6);
  c.subgrids.push_back(g);
  return c;
}

CampaignSpec CampaignSpec::sparse() {
  const auto d = dense().subgrids.front().values;
  CampaignSpec c;
  c.name = "sparse";
  SubGrid pt, du, combined;
  for (std::size_t i = 0; i < kStageCount; ++i) {
    pt.values[i] = {0.0};
    du.values[i] = {0.0};
  }
  pt.values[0] = d[0];
  pt.values[1] = d[1];
  du.values[2] = d[2];
  du.values[4] = d[4];
  combined.values[0] = {0, 7.5, 19.4};
  combined.values[1] = {0, 1.84, 3.675};
  combined.values[2] = milli({0, 20, 55, 100}, 1e-3);
  combined.values[3] = milli({0, 4.61}, 1e-3);
  combined.values[4] = milli({0, 20, 60}, 1e-6);
  c.subgrids = {pt, du, combined};
  c.truncate = OperationalLimits{};
  c.drop_truncated = true;
  return c;
}

CampaignSpec CampaignSpec::preset(const std::string& name) {
  if (name == "dense") return dense();
  if (name == "sparse") return sparse();
  if (name == "coarse") return coarse();
  throw Error(ErrorCode::InvalidArgument, "unknown campaign preset '" + name + "'");
}

void CampaignSpec::validate() const {
  if (subgrids.empty()) throw Error(ErrorCode::InvalidArgument, "campaign has no sub-grids");
  for (const auto& g : subgrids) {
    for (const auto& axis : g.values) {
      if (axis.empty()) throw Error(ErrorCode::InvalidArgument, "campaign axes must be non-empty");
      for (std::size_t i = 0; i < axis.size(); ++i) {
        if (!(std::isfinite(axis[i]) && axis[i] >= 0.0) || (i > 0 && !(axis[i] > axis[i - 1]))) {
          throw Error(ErrorCode::InvalidArgument, "campaign axes must be ascending and non-negative");
        }
      }
    }
  }
  if (!(time_step_s > 0.0 && averaging_window_s > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "time step and averaging window must be positive");
  }
}

Dataset run_campaign(const SyntheticParams& p, const CampaignSpec& spec) {
  p.validate();
  spec.validate();

  std::set<std::array<double, kStageCount>> points;
  for (const auto& g : spec.subgrids) {
    std::size_t total = 1;
    for (const auto& axis : g.values) total *= axis.size();
    for (std::size_t flat = 0; flat < total; ++flat) {
      std::array<double, kStageCount> q{};
      std::size_t rest = flat;
      for (std::size_t s = kStageCount; s-- > 0;) {
        q[s] = g.values[s][rest % g.values[s].size()];
        rest /= g.values[s].size();
      }
      points.insert(q);
    }
  }

  Dataset d;
  d.has_p_condenser = d.has_p_still = d.has_flow = true;
  d.metadata.platform_id = "synthetic";
  d.metadata.cooldown_id = spec.name;
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const bool noisy = std::any_of(p.noise_rel.begin(), p.noise_rel.end(), [](double v) { return v > 0.0; });

  std::size_t flagged = 0, dropped = 0, slot = 0;
  for (const auto& qa : points) {
    MeasurementRecord r;
    r.applied = LoadVector(qa);
    r.state = synth_state(p, r.applied);
    if (spec.truncate && !check_limits(r.state, *spec.truncate).empty()) {
      if (spec.drop_truncated) {
        ++dropped;
        continue;
      }
      r.set(RecordFlag::LimitTruncated);
      ++flagged;
    }
    const double t = static_cast<double>(slot++) * spec.time_step_s;
    r.timestamp_s = t;
    r.averaging_window_s = spec.averaging_window_s;
    if (noisy) {
      for (std::size_t f = 0; f < kFieldCount; ++f) {
        double z = gauss(rng);
        r.state.values[f] *= 1.0 + p.noise_rel[f] * z;
      }
    }
    if (spec.drift) r.state[Field::T_PT1] += p.pt1_drift_K_per_s * t;
    d.records.push_back(r);
  }

  nlohmann::ordered_json info;
  info["campaign"] = spec.name;
  info["seed"] = spec.seed;
  info["drift"] = spec.drift;
  info["pt1_drift_K_per_s"] = spec.drift ? p.pt1_drift_K_per_s : 0.0;
  info["time_step_s"] = spec.time_step_s;
  info["noise_rel"] = p.noise_rel;
  d.metadata.extra["synthetic"] = info;
  d.metadata.notes.push_back("synthetic campaign '" + spec.name + "', seed " + std::to_string(spec.seed));
  if (flagged) d.metadata.notes.push_back(std::to_string(flagged) + " records flagged LIMIT_TRUNCATED");
  if (dropped) d.metadata.notes.push_back(std::to_string(dropped) + " grid points dropped by limit truncation");
  finalize_dataset(d);
  return d;
}

SyntheticParams parse_params(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadDocument, std::string("parameter document is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::BadDocument, "parameter document must be an object");
  SyntheticParams p;
  std::map<std::string, double*> scalars = {
      {"t1_0", &p.t1_0}, {"a1", &p.a1}, {"c1", &p.c1}, {"k12", &p.k12}, {"t2_0", &p.t2_0},
      {"a2", &p.a2}, {"c2", &p.c2}, {"k21", &p.k21}, {"k2s", &p.k2s}, {"L", &p.L},
      {"b_stl", &p.b_stl}, {"ts0", &p.ts0}, {"n", &p.n}, {"H", &p.H}, {"x0", &p.x0},
      {"w", &p.w}, {"r1", &p.r1}, {"qsat", &p.qsat}, {"xi", &p.xi}, {"b_mxc", &p.b_mxc},
      {"ps0", &p.ps0}, {"ps1", &p.ps1}, {"pc0", &p.pc0}, {"pc1", &p.pc1},
      {"pt1_drift_K_per_s", &p.pt1_drift_K_per_s}};
  try {
    for (const auto& [key, v] : j.items()) {
      if (auto it = scalars.find(key); it != scalars.end()) {
        *it->second = v.get<double>();
      } else if (key == "noise_rel") {
        for (const auto& [name, amp] : v.items()) {
          auto f = parse_field(name);
          if (!f) throw Error(ErrorCode::BadDocument, "unknown field '" + name + "' in noise_rel");
          p.noise_rel[index(*f)] = amp.get<double>();
        }
      } else {
        throw Error(ErrorCode::BadDocument, "unknown synthetic parameter '" + key + "'");
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadDocument, std::string("malformed parameter document: ") + e.what());
  }
  p.validate();
  return p;
}

CampaignSpec parse_campaign(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadDocument, std::string("campaign document is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw Error(ErrorCode::BadDocument, "campaign document must be an object");
  try {
    CampaignSpec c = j.contains("preset") ? CampaignSpec::preset(j["preset"].get<std::string>()) : CampaignSpec{};
    if (j.contains("subgrids")) {
      c.subgrids.clear();
      for (const auto& g : j["subgrids"]) {
        SubGrid sg;
        for (StageId s : kStages) sg.values[index(s)] = {0.0};
        for (const auto& [name, vals] : g.items()) {
          auto s = parse_stage(name);
          if (!s || *s == StageId::AMBIENT) throw Error(ErrorCode::BadDocument, "unknown stage '" + name + "'");
          sg.values[index(*s)] = vals.get<std::vector<double>>();
        }
        c.subgrids.push_back(sg);
      }
    }
    c.name = j.value("name", c.name);
    c.seed = j.value("seed", c.seed);
    c.drift = j.value("drift", c.drift);
    c.time_step_s = j.value("time_step_s", c.time_step_s);
    c.averaging_window_s = j.value("averaging_window_s", c.averaging_window_s);
    c.drop_truncated = j.value("drop_truncated", c.drop_truncated);
    if (j.contains("truncate")) {
      if (j["truncate"].is_null()) {
        c.truncate.reset();
      } else {
        c.truncate = parse_limits(j["truncate"].dump());
      }
    }
    c.validate();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadDocument, std::string("malformed campaign document: ") + e.what());
  }
}

}  // namespace cryomap
