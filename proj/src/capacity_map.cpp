#include "cryomap/capacity_map.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "cryomap/error.hpp"
#include "cryomap/table_io.hpp"

namespace cryomap {

namespace {

constexpr std::size_t kMaxCorners = 1u << kStageCount;

// Bounds tolerance for floating-point round-off on query coordinates; far
// below any meaningful power resolution.
double bound_slack(const std::vector<double>& axis) {
  return 1e-12 * std::max(1.0, std::abs(axis.back() - axis.front()));
}

struct Location {
  NodeIndex lower{};
  std::array<std::size_t, kStageCount> active_dims{};
  std::array<double, kStageCount> t{};
  std::size_t active = 0;
  StageId offending = StageId::PT1;
};

QueryStatus locate(const GridIndex& g, const std::array<double, kStageCount>& q, Location& loc) {
  loc.active = 0;
  for (StageId s : kStages) {
    const auto& axis = g.axis(s);
    const std::size_t d = index(s);
    double v = q[d];
    if (axis.size() == 1) {
      if (!(std::abs(v - axis[0]) <= kSnapTolerance)) {
        loc.offending = s;
        return QueryStatus::CollapsedAxisMismatch;
      }
      loc.lower[d] = 0;
      continue;
    }
    const double slack = bound_slack(axis);
    if (!(v >= axis.front() - slack && v <= axis.back() + slack)) {
      loc.offending = s;
      return QueryStatus::OutOfDomain;
    }
    v = std::clamp(v, axis.front(), axis.back());
    auto it = std::upper_bound(axis.begin(), axis.end(), v);
    std::size_t j = static_cast<std::size_t>(it - axis.begin()) - 1;
    loc.lower[d] = static_cast<std::uint32_t>(j);
    if (axis[j] == v) continue;  // on a node along this axis
    loc.active_dims[loc.active] = d;
    loc.t[loc.active] = (v - axis[j]) / (axis[j + 1] - axis[j]);
    ++loc.active;
  }
  return QueryStatus::Ok;
}

// Nested std::lerp reduction: exact at t = 0 and t = 1 and bounded by the
// corner values, which gives node exactness and face continuity.
void interpolate(const std::array<const PlatformState*, kMaxCorners>& corners, std::size_t active,
                 const std::array<double, kStageCount>& t, PlatformState& out) {
  const std::size_t n = std::size_t{1} << active;
  std::array<double, kMaxCorners> buf{};
  for (std::size_t f = 0; f < kFieldCount; ++f) {
    for (std::size_t c = 0; c < n; ++c) buf[c] = corners[c]->values[f];
    std::size_t width = n;
    for (std::size_t a = 0; a < active; ++a) {
      width /= 2;
      for (std::size_t c = 0; c < width; ++c) buf[c] = std::lerp(buf[2 * c], buf[2 * c + 1], t[a]);
    }
    out.values[f] = buf[0];
  }
}

// Corner c has bit a set when active axis a takes its upper node.
bool gather(const GridIndex& g, const Dataset& d, const Location& loc,
            std::array<const PlatformState*, kMaxCorners>& corners) {
  const std::size_t n = std::size_t{1} << loc.active;
  for (std::size_t c = 0; c < n; ++c) {
    NodeIndex node = loc.lower;
    for (std::size_t a = 0; a < loc.active; ++a) {
      if (c & (std::size_t{1} << a)) ++node[loc.active_dims[a]];
    }
    auto rec = g.record_at(node);
    if (!rec) return false;
    corners[c] = &d.records[*rec].state;
  }
  return true;
}

std::string describe(const LoadVector& q) {
  std::ostringstream s;
  s << "(";
  for (StageId st : kStages) s << (st == StageId::PT1 ? "" : ", ") << stage_name(st) << "=" << q[st];
  s << ") W";
  return s.str();
}

}  // namespace

const char* containment_name(Containment c) {
  switch (c) {
    case Containment::NodeExact: return "NODE_EXACT";
    case Containment::Interior: return "INTERIOR";
    case Containment::OnFace: return "ON_FACE";
  }
  return "UNKNOWN";
}

CapacityMap CapacityMap::build(const Dataset& d) {
  if (d.records.empty()) throw Error(ErrorCode::EmptyDataset, "cannot build a map from an empty dataset");
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    if (!d.records[i].state.temperatures_valid()) {
      throw Error(ErrorCode::BadDocument,
                  "record " + std::to_string(i) + " has a non-positive or non-finite temperature");
    }
  }
  CapacityMap m;
  m.dataset_ = std::make_shared<const Dataset>(d);
  m.grid_ = to_grid(*m.dataset_);
  for (Field f : kFields) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const auto& r : d.records) {
      lo = std::min(lo, r.state[f]);
      hi = std::max(hi, r.state[f]);
    }
    m.ranges_[index(f)] = {lo, hi};
  }
  return m;
}

std::pair<double, double> CapacityMap::field_range(Field f) const { return ranges_[index(f)]; }

QueryStatus CapacityMap::try_query(const std::array<double, kStageCount>& q, PlatformState& out) const {
  Location loc;
  auto status = locate(grid_, q, loc);
  if (status != QueryStatus::Ok) return status;
  std::array<const PlatformState*, kMaxCorners> corners{};
  if (!gather(grid_, *dataset_, loc, corners)) return QueryStatus::InvalidCell;
  if (loc.active == 0) {
    out = *corners[0];
  } else {
    interpolate(corners, loc.active, loc.t, out);
  }
  return QueryStatus::Ok;
}

QueryResult CapacityMap::query(const LoadVector& q) const {
  Location loc;
  auto status = locate(grid_, q.values(), loc);
  if (status == QueryStatus::OutOfDomain) {
    const auto& axis = grid_.axis(loc.offending);
    std::ostringstream msg;
    msg << "load " << q[loc.offending] << " W on " << stage_name(loc.offending)
        << " is outside the map domain [" << axis.front() << ", " << axis.back() << "] W";
    throw Error(ErrorCode::OutOfDomain, msg.str(), loc.offending);
  }
  if (status == QueryStatus::CollapsedAxisMismatch) {
    std::ostringstream msg;
    msg << "load " << q[loc.offending] << " W on " << stage_name(loc.offending)
        << " does not match the collapsed axis value " << grid_.axis(loc.offending).front() << " W";
    throw Error(ErrorCode::CollapsedAxisMismatch, msg.str(), loc.offending);
  }
  std::array<const PlatformState*, kMaxCorners> corners{};
  if (!gather(grid_, *dataset_, loc, corners)) {
    throw Error(ErrorCode::InvalidCell, "enclosing cell for " + describe(q) + " has missing corners");
  }
  QueryResult r;
  r.cell = loc.lower;
  if (loc.active == 0) {
    r.state = *corners[0];
    r.containment = Containment::NodeExact;
  } else {
    interpolate(corners, loc.active, loc.t, r.state);
    r.containment = loc.active == grid_.active_stages().size() ? Containment::Interior
                                                               : Containment::OnFace;
  }
  return r;
}

PlatformState CapacityMap::evaluate_cell(const NodeIndex& lower,
                                         const std::array<double, kStageCount>& t) const {
  if (!grid_.cell_valid(lower)) throw Error(ErrorCode::InvalidCell, "cell is not valid");
  Location loc;
  loc.lower = lower;
  for (StageId s : grid_.active_stages()) {
    loc.active_dims[loc.active] = index(s);
    loc.t[loc.active] = t[index(s)];
    ++loc.active;
  }
  std::array<const PlatformState*, kMaxCorners> corners{};
  gather(grid_, *dataset_, loc, corners);
  PlatformState out;
  interpolate(corners, loc.active, loc.t, out);
  return out;
}

std::size_t SliceTable::gap_count() const {
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](const auto& v) { return !v.has_value(); }));
}

SliceTable slice(const CapacityMap& m, const SliceSpec& s) {
  const auto& g = m.grid();
  if (s.x == s.y) throw Error(ErrorCode::InvalidArgument, "slice axes must be distinct");
  for (StageId v : {s.x, s.y}) {
    if (v == StageId::AMBIENT) throw Error(ErrorCode::InvalidArgument, "AMBIENT is not a map axis");
    if (g.collapsed(v)) {
      throw Error(ErrorCode::InvalidArgument,
                  "slice axis " + std::string(stage_name(v)) + " is collapsed", v);
    }
  }
  if (!m.has_field(s.field)) {
    throw Error(ErrorCode::InvalidArgument,
                "field " + std::string(field_name(s.field)) + " is absent from this map");
  }
  // Validate the fixed entries with a probe at the lower x/y corner.
  std::array<double, kStageCount> probe = s.fixed.values();
  probe[index(s.x)] = g.axis(s.x).front();
  probe[index(s.y)] = g.axis(s.y).front();
  for (StageId st : kStages) {
    if (st == s.x || st == s.y) continue;
    const auto& axis = g.axis(st);
    double v = probe[index(st)];
    if (axis.size() == 1) {
      if (std::abs(v - axis[0]) > kSnapTolerance) {
        throw Error(ErrorCode::CollapsedAxisMismatch,
                    "fixed load on " + std::string(stage_name(st)) + " does not match collapsed axis", st);
      }
    } else if (v < axis.front() || v > axis.back()) {
      throw Error(ErrorCode::OutOfDomain,
                  "fixed load on " + std::string(stage_name(st)) + " is outside the map domain", st);
    }
  }

  SliceTable t;
  t.spec = s;
  t.xs = g.axis(s.x);
  t.ys = g.axis(s.y);
  t.values.resize(t.xs.size() * t.ys.size());
  PlatformState st;
  for (std::size_t iy = 0; iy < t.ys.size(); ++iy) {
    for (std::size_t ix = 0; ix < t.xs.size(); ++ix) {
      auto q = probe;
      q[index(s.x)] = t.xs[ix];
      q[index(s.y)] = t.ys[iy];
      if (m.try_query(q, st) == QueryStatus::Ok) t.values[iy * t.xs.size() + ix] = st[s.field];
    }
  }
  return t;
}

std::string slice_to_csv(const SliceTable& t) {
  std::string out = "x_W,y_W,value\n";
  for (std::size_t iy = 0; iy < t.ys.size(); ++iy) {
    for (std::size_t ix = 0; ix < t.xs.size(); ++ix) {
      const auto& v = t.at(ix, iy);
      out += io::format_double(t.xs[ix]) + "," + io::format_double(t.ys[iy]) + "," +
             (v ? io::format_double(*v) : std::string("nan")) + "\n";
    }
  }
  return out;
}

double cooling_power_at(const CapacityMap& m, StageId stage, double target_K,
                        const LoadVector& fixed) {
  if (stage == StageId::AMBIENT || m.grid().collapsed(stage)) {
    throw Error(ErrorCode::InvalidArgument,
                "stage axis " + std::string(stage_name(stage)) + " is not a varying map axis", stage);
  }
  const auto& axis = m.grid().axis(stage);
  auto at = [&](double p) {
    auto q = fixed.values();
    q[index(stage)] = p;
    return m.query(LoadVector(q)).state.temperature(stage);
  };

  std::vector<double> profile(axis.size());
  for (std::size_t i = 0; i < axis.size(); ++i) profile[i] = at(axis[i]);
  for (std::size_t i = 0; i + 1 < profile.size(); ++i) {
    if (profile[i + 1] < profile[i]) {
      throw Error(ErrorCode::NonMonotoneProfile,
                  "T(" + std::string(stage_name(stage)) + ") decreases along its own axis at " +
                      io::format_double(axis[i + 1]) + " W",
                  stage);
    }
  }
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (profile[i] == target_K) return axis[i];
  }
  if (target_K < profile.front() || target_K > profile.back()) {
    std::ostringstream msg;
    msg << "target " << target_K << " K on " << stage_name(stage) << " lies outside ["
        << profile.front() << ", " << profile.back() << "] K along the axis";
    throw Error(ErrorCode::NotBracketed, msg.str(), stage);
  }
  std::size_t seg = 0;
  while (!(profile[seg] < target_K && target_K < profile[seg + 1])) ++seg;

  const double tol = (stage == StageId::PT1 || stage == StageId::PT2) ? 1e-3 : 1e-6;
  double lo = axis[seg], hi = axis[seg + 1];
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (at(mid) < target_K) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

MapDiff diff_maps(const CapacityMap& a, const CapacityMap& b) {
  MapDiff out;
  for (Field f : kFields) out.field_present[index(f)] = a.has_field(f) && b.has_field(f);
  const auto& da = a.dataset();
  for (const auto& rec : da.records) {
    auto node = b.grid().snap(rec.applied);
    if (!node) continue;
    auto j = b.grid().record_at(*node);
    if (!j) continue;
    const auto& sb = b.node_state(*j);
    NodeDiff nd;
    nd.q = rec.applied;
    for (Field f : kFields) {
      if (!out.field_present[index(f)]) continue;
      double va = rec.state[f], vb = sb[f];
      nd.delta[index(f)] = vb - va;
      nd.pct[index(f)] = va != 0.0 ? 100.0 * (vb - va) / va : 0.0;
    }
    out.nodes.push_back(nd);
  }
  if (out.nodes.empty()) throw Error(ErrorCode::NoSharedNodes, "maps share no load-vector nodes");
  const double n = static_cast<double>(out.nodes.size());
  for (const auto& nd : out.nodes) {
    for (std::size_t f = 0; f < kFieldCount; ++f) {
      out.mean_delta[f] += nd.delta[f] / n;
      out.mean_pct[f] += nd.pct[f] / n;
      out.max_abs_pct[f] = std::max(out.max_abs_pct[f], std::abs(nd.pct[f]));
    }
  }
  return out;
}

std::string diff_to_csv(const MapDiff& d) {
  std::string out;
  for (StageId s : kStages) out += (s == StageId::PT1 ? "" : ",") + std::string("q_") + std::string(stage_token(s)) + "_W";
  for (Field f : kFields) {
    if (d.field_present[index(f)]) out += ",d_" + std::string(field_name(f));
  }
  for (Field f : kFields) {
    if (d.field_present[index(f)]) out += ",pct_" + std::string(field_name(f));
  }
  out += '\n';
  for (const auto& nd : d.nodes) {
    for (StageId s : kStages) out += (s == StageId::PT1 ? "" : ",") + io::format_double(nd.q[s]);
    for (Field f : kFields) {
      if (d.field_present[index(f)]) out += "," + io::format_double(nd.delta[index(f)]);
    }
    for (Field f : kFields) {
      if (d.field_present[index(f)]) out += "," + io::format_double(nd.pct[index(f)]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace cryomap
