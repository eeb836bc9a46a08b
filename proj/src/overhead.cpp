#include "cryomap/overhead.hpp"

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cryomap/error.hpp"
#include "cryomap/table_io.hpp"

namespace cryomap {

namespace {

struct NodeEval {
  bool available = false;
  PlatformState state;
  std::vector<LimitViolation> violations;

  bool feasible() const { return available && violations.empty(); }
  std::string label() const {
    if (!available) return "INVALID_CELL";
    if (violations.empty()) return "OK";
    return std::string(field_name(violations.front().quantity));
  }
};

NodeEval evaluate(const CapacityMap& m, std::array<double, kStageCount> q, const OperationalLimits& lim) {
  NodeEval e;
  e.available = m.try_query(q, e.state) == QueryStatus::Ok;
  if (e.available) e.violations = check_limits(e.state, lim);
  return e;
}

std::vector<Field> limited_fields(const OperationalLimits& lim) {
  std::vector<Field> out;
  for (StageId s : kStages) {
    if (lim.max_temperature_K[index(s)]) out.push_back(temperature_field(s));
  }
  if (lim.max_p_condenser_Pa) out.push_back(Field::P_COND);
  if (lim.max_p_still_Pa) out.push_back(Field::P_STILL);
  return out;
}

double limit_of(const OperationalLimits& lim, Field f) {
  if (is_temperature(f)) return *lim.max_temperature_K[index(f)];
  return f == Field::P_COND ? *lim.max_p_condenser_Pa : *lim.max_p_still_Pa;
}

void check_axis(const CapacityMap& m, StageId stage) {
  if (stage == StageId::AMBIENT || m.grid().collapsed(stage)) {
    throw Error(ErrorCode::InvalidArgument,
                "stage axis " + std::string(stage_name(stage)) + " is not a varying map axis", stage);
  }
}

std::vector<NodeEval> profile(const CapacityMap& m, StageId stage, const LoadVector& fixed,
                              const OperationalLimits& lim) {
  check_axis(m, stage);
  const auto& axis = m.grid().axis(stage);
  {
    // Surfaces domain errors in the fixed loads before scanning.
    auto probe = fixed.values();
    probe[index(stage)] = axis.front();
    for (StageId s : kStages) {
      if (s == stage) continue;
      const auto& a = m.grid().axis(s);
      double v = probe[index(s)];
      if (a.size() == 1 ? std::abs(v - a[0]) > kSnapTolerance : (v < a.front() || v > a.back())) {
        m.query(LoadVector(probe));
      }
    }
  }
  std::vector<NodeEval> out;
  for (double p : axis) {
    auto q = fixed.values();
    q[index(stage)] = p;
    out.push_back(evaluate(m, q, lim));
  }
  return out;
}

// Index of the last node of the leading feasible run, or -1.
long leading_feasible(const std::vector<NodeEval>& nodes) {
  long i = -1;
  while (i + 1 < static_cast<long>(nodes.size()) && nodes[static_cast<std::size_t>(i + 1)].feasible()) ++i;
  return i;
}

}  // namespace

OperationalLimits OperationalLimits::none() {
  OperationalLimits l;
  l.max_temperature_K.fill(std::nullopt);
  return l;
}

void OperationalLimits::validate() const {
  for (const auto& v : max_temperature_K) {
    if (v && !(*v > 0.0)) throw Error(ErrorCode::InvalidArgument, "temperature limits must be positive");
  }
  if ((max_p_still_Pa && !(*max_p_still_Pa > 0.0)) || (max_p_condenser_Pa && !(*max_p_condenser_Pa > 0.0))) {
    throw Error(ErrorCode::InvalidArgument, "pressure limits must be positive");
  }
}

std::string LimitViolation::describe() const {
  std::ostringstream s;
  s << field_name(quantity) << " = " << value << " " << field_unit(quantity) << " exceeds limit "
    << threshold << " " << field_unit(quantity);
  return s.str();
}

std::vector<LimitViolation> check_limits(const PlatformState& s, const OperationalLimits& lim) {
  std::vector<LimitViolation> out;
  auto test = [&](Field f, const std::optional<double>& limit) {
    if (limit && std::isfinite(s[f]) && s[f] > *limit) out.push_back({f, s[f], *limit});
  };
  for (StageId st : kStages) test(temperature_field(st), lim.max_temperature_K[index(st)]);
  test(Field::P_COND, lim.max_p_condenser_Pa);
  test(Field::P_STILL, lim.max_p_still_Pa);
  return out;
}

HeadroomReport max_stage_power(const CapacityMap& m, StageId stage, const LoadVector& fixed,
                               const OperationalLimits& lim) {
  lim.validate();
  const auto nodes = profile(m, stage, fixed, lim);
  const auto& axis = m.grid().axis(stage);
  const std::size_t n = axis.size();

  HeadroomReport r;
  r.stage = stage;
  r.fixed = fixed;

  // Bisection is valid when feasibility along the axis is a prefix: the
  // available nodes form a prefix and every limited quantity is monotone.
  bool monotone = true;
  std::size_t available_prefix = 0;
  while (available_prefix < n && nodes[available_prefix].available) ++available_prefix;
  for (std::size_t i = available_prefix; i < n; ++i) {
    if (nodes[i].available) {
      monotone = false;
      r.notes.push_back("valid nodes resume above an invalid one");
      break;
    }
  }
  for (Field f : limited_fields(lim)) {
    if (!m.has_field(f) || available_prefix == 0) continue;
    bool rising = true, never_binds = true;
    for (std::size_t i = 0; i < available_prefix; ++i) {
      if (i + 1 < available_prefix) rising = rising && nodes[i + 1].state[f] >= nodes[i].state[f];
      never_binds = never_binds && !(nodes[i].state[f] > limit_of(lim, f));
    }
    if (!(rising || never_binds)) {
      monotone = false;
      r.notes.push_back(std::string(field_name(f)) + " is not monotone along the " +
                        std::string(stage_name(stage)) + " axis");
    }
  }

  long best;
  if (monotone) {
    long lo = -1, hi = static_cast<long>(n);  // nodes[lo] feasible, nodes[hi] not
    while (hi - lo > 1) {
      long mid = lo + (hi - lo) / 2;
      if (nodes[static_cast<std::size_t>(mid)].feasible()) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    best = lo;
  } else {
    r.used_exhaustive_scan = true;
    r.notes.push_back("fell back to an exhaustive node scan");
    best = leading_feasible(nodes);
  }

  if (best < 0) {
    r.violated_at_minimum = true;
    r.admissible_max_W = axis.front();
    r.binding = nodes.front().label();
    r.grid_step_W = n > 1 ? axis[1] - axis[0] : 0.0;
    r.notes.push_back("limits are already violated at the axis minimum");
    return r;
  }
  const auto b = static_cast<std::size_t>(best);
  r.admissible_max_W = axis[b];
  if (b + 1 == n) {
    r.binding = "DOMAIN_EDGE";
    r.grid_step_W = 0.0;
  } else {
    r.binding = nodes[b + 1].label();
    r.grid_step_W = axis[b + 1] - axis[b];
  }
  return r;
}

double max_stage_power_scan(const CapacityMap& m, StageId stage, const LoadVector& fixed,
                            const OperationalLimits& lim) {
  const auto nodes = profile(m, stage, fixed, lim);
  long best = leading_feasible(nodes);
  return m.grid().axis(stage)[best < 0 ? 0 : static_cast<std::size_t>(best)];
}

AdmissibilityTable headroom_surface(const CapacityMap& m, StageId x, StageId y,
                                    const LoadVector& fixed, const OperationalLimits& lim) {
  lim.validate();
  SliceSpec spec;
  spec.x = x;
  spec.y = y;
  spec.fixed = fixed;
  spec.field = Field::T_MXC;
  auto s = slice(m, spec);  // argument and domain checks

  AdmissibilityTable t;
  t.x = x;
  t.y = y;
  t.xs = s.xs;
  t.ys = s.ys;
  for (std::size_t iy = 0; iy < t.ys.size(); ++iy) {
    for (std::size_t ix = 0; ix < t.xs.size(); ++ix) {
      auto q = fixed.values();
      q[index(x)] = t.xs[ix];
      q[index(y)] = t.ys[iy];
      auto e = evaluate(m, q, lim);
      t.admissible.push_back(e.feasible());
      t.binding.push_back(e.label());
    }
  }
  return t;
}

std::string headroom_to_csv(const AdmissibilityTable& t) {
  std::string out = "x_W,y_W,admissible,binding\n";
  for (std::size_t iy = 0; iy < t.ys.size(); ++iy) {
    for (std::size_t ix = 0; ix < t.xs.size(); ++ix) {
      out += io::format_double(t.xs[ix]) + "," + io::format_double(t.ys[iy]) + "," +
             (t.at(ix, iy) ? "1" : "0") + "," + t.label(ix, iy) + "\n";
    }
  }
  return out;
}

std::string headroom_report_text(const HeadroomReport& r) {
  std::ostringstream s;
  s << "stage," << stage_name(r.stage) << "\n";
  for (StageId st : kStages) {
    if (st != r.stage) s << "fixed_" << stage_token(st) << "_W," << io::format_double(r.fixed[st]) << "\n";
  }
  s << "admissible_max_W," << io::format_double(r.admissible_max_W) << "\n";
  s << "grid_step_W," << io::format_double(r.grid_step_W) << "\n";
  s << "binding," << r.binding << "\n";
  s << "violated_at_minimum," << (r.violated_at_minimum ? 1 : 0) << "\n";
  s << "exhaustive_scan," << (r.used_exhaustive_scan ? 1 : 0) << "\n";
  for (const auto& n : r.notes) s << "# " << n << "\n";
  return s.str();
}

OperationalLimits parse_limits(const std::string& json_text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::BadDocument, std::string("limits document is not valid JSON: ") + e.what());
  }
  OperationalLimits lim;
  auto optional = [](const nlohmann::json& v) -> std::optional<double> {
    if (v.is_null()) return std::nullopt;
    if (!v.is_number()) throw Error(ErrorCode::BadDocument, "limit values must be numbers or null");
    return v.get<double>();
  };
  if (!j.is_object()) throw Error(ErrorCode::BadDocument, "limits document must be an object");
  if (j.contains("max_temperature_K")) {
    for (const auto& [name, v] : j["max_temperature_K"].items()) {
      auto s = parse_stage(name);
      if (!s || *s == StageId::AMBIENT) throw Error(ErrorCode::BadDocument, "unknown stage '" + name + "'");
      lim.max_temperature_K[index(*s)] = optional(v);
    }
  }
  if (j.contains("max_p_still_Pa")) lim.max_p_still_Pa = optional(j["max_p_still_Pa"]);
  if (j.contains("max_p_condenser_Pa")) lim.max_p_condenser_Pa = optional(j["max_p_condenser_Pa"]);
  lim.validate();
  return lim;
}

}  // namespace cryomap
