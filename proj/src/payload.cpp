#include "cryomap/payload.hpp"

#include <algorithm>

#include "cryomap/error.hpp"

namespace cryomap {

namespace {

double temperature_of(StageId s, const std::map<StageId, double>& temps, double ambient) {
  if (s == StageId::AMBIENT) return ambient;
  auto it = temps.find(s);
  if (it == temps.end()) {
    throw Error(ErrorCode::MissingTemperature,
                "no temperature given for stage " + std::string(stage_name(s)), s);
  }
  return it->second;
}

double segment_load(const std::vector<ConductorLink>& links, double th, double tc) {
  if (!(th > tc)) return 0.0;
  double q = 0.0;
  for (const auto& l : links) q += conduction_load(l, th, tc);
  return q;
}

ConductorLink link_for(const CableElement& e, const SpanSegment& seg) {
  return {e.material, e.area_m2, seg.length_m, seg.hot, seg.cold};
}

}  // namespace

const char* coupling_name(Coupling c) {
  switch (c) {
    case Coupling::ThermalizedPerStage: return "THERMALIZED_PER_STAGE";
    case Coupling::ContinuousSpan: return "CONTINUOUS_SPAN";
    case Coupling::OuterOnlyThermalized: return "OUTER_ONLY_THERMALIZED";
  }
  return "UNKNOWN";
}

std::optional<Coupling> parse_coupling(std::string_view text) {
  for (Coupling c : {Coupling::ThermalizedPerStage, Coupling::ContinuousSpan,
                     Coupling::OuterOnlyThermalized}) {
    if (text == coupling_name(c)) return c;
  }
  return std::nullopt;
}

std::vector<SpanSegment> CableRun::segments() const {
  std::vector<SpanSegment> out;
  for (std::size_t i = 0; i + 1 < span.size() && i < lengths_m.size(); ++i) {
    out.push_back({span[i], span[i + 1], lengths_m[i]});
  }
  return out;
}

void validate_payload(const PayloadSpec& p) {
  for (const auto& run : p.runs) {
    const std::string who = "cable run '" + run.cable.name + "'";
    if (run.count < 1) throw Error(ErrorCode::InconsistentCoupling, who + " has count 0");
    if (run.span.size() < 2) throw Error(ErrorCode::InconsistentCoupling, who + " spans fewer than two stages");
    if (run.lengths_m.size() != run.span.size() - 1) {
      throw Error(ErrorCode::InconsistentCoupling, who + " needs one length per span segment");
    }
    for (std::size_t i = 0; i + 1 < run.span.size(); ++i) {
      if (!warmer_than(run.span[i], run.span[i + 1])) {
        throw Error(ErrorCode::InconsistentCoupling, who + " span is not ordered warm to cold");
      }
      if (!(run.lengths_m[i] > 0.0)) {
        throw Error(ErrorCode::InconsistentCoupling, who + " has a non-positive segment length");
      }
    }
    for (std::size_t i = 1; i < run.span.size(); ++i) {
      if (run.span[i] == StageId::AMBIENT) {
        throw Error(ErrorCode::InconsistentCoupling, who + " can only start at AMBIENT");
      }
    }
    if (run.source == CurveSource::Manufacturer && run.coupling == Coupling::OuterOnlyThermalized) {
      throw Error(ErrorCode::InconsistentCoupling,
                  who + ": OUTER_ONLY_THERMALIZED needs per-element material data");
    }
    if (run.source == CurveSource::Manufacturer && !run.cable.manufacturer) {
      throw Error(ErrorCode::MissingSourceData, who + " has no manufacturer curve");
    }
    if (run.source == CurveSource::MaterialReference && run.cable.elements.empty()) {
      throw Error(ErrorCode::MissingSourceData, who + " has no material elements");
    }
    if (run.coupling == Coupling::OuterOnlyThermalized &&
        std::none_of(run.cable.elements.begin(), run.cable.elements.end(),
                     [](const CableElement& e) { return e.role == "outer"; })) {
      throw Error(ErrorCode::InconsistentCoupling, who + " has no outer conductor to thermalize");
    }
  }
}

std::vector<ConductorLink> decompose_cable(const CableModel& cable, const SpanSegment& segment,
                                           CurveSource source) {
  std::vector<ConductorLink> links;
  if (source == CurveSource::Manufacturer) {
    if (!cable.manufacturer) {
      throw Error(ErrorCode::MissingSourceData, "cable '" + cable.name + "' has no manufacturer curve");
    }
    links.push_back(link_for(*cable.manufacturer, segment));
    return links;
  }
  if (cable.elements.empty()) {
    throw Error(ErrorCode::MissingSourceData, "cable '" + cable.name + "' has no material elements");
  }
  for (const auto& e : cable.elements) links.push_back(link_for(e, segment));
  return links;
}

std::vector<LoadVector> run_loads(const PayloadSpec& p, const std::map<StageId, double>& temps,
                                  double ambient_K) {
  validate_payload(p);
  if (auto it = temps.find(StageId::PT1); it != temps.end() && !(ambient_K > it->second)) {
    throw Error(ErrorCode::InvalidArgument, "ambient temperature must exceed the PT1 temperature");
  }
  std::vector<LoadVector> out;
  for (const auto& run : p.runs) {
    std::array<double, kStageCount> q{};
    auto deposit = [&](StageId cold, double watts) { q[index(cold)] += watts; };
    const auto segs = run.segments();
    if (run.coupling == Coupling::ThermalizedPerStage) {
      for (const auto& seg : segs) {
        double th = temperature_of(seg.hot, temps, ambient_K);
        double tc = temperature_of(seg.cold, temps, ambient_K);
        deposit(seg.cold, segment_load(decompose_cable(run.cable, seg, run.source), th, tc));
      }
    } else {
      double total_length = 0.0;
      for (double l : run.lengths_m) total_length += l;
      SpanSegment whole{run.span.front(), run.span.back(), total_length};
      double th = temperature_of(whole.hot, temps, ambient_K);
      double tc = temperature_of(whole.cold, temps, ambient_K);
      if (run.coupling == Coupling::ContinuousSpan) {
        deposit(whole.cold, segment_load(decompose_cable(run.cable, whole, run.source), th, tc));
      } else {
        std::vector<ConductorLink> continuous;
        for (const auto& e : run.cable.elements) {
          if (e.role != "outer") continuous.push_back(link_for(e, whole));
        }
        deposit(whole.cold, segment_load(continuous, th, tc));
        for (const auto& seg : segs) {
          std::vector<ConductorLink> outer;
          for (const auto& e : run.cable.elements) {
            if (e.role == "outer") outer.push_back(link_for(e, seg));
          }
          deposit(seg.cold, segment_load(outer, temperature_of(seg.hot, temps, ambient_K),
                                         temperature_of(seg.cold, temps, ambient_K)));
        }
      }
    }
    for (double& v : q) v *= run.count;
    out.emplace_back(q);
  }
  return out;
}

LoadVector aggregate_loads(const PayloadSpec& p, const std::map<StageId, double>& temps,
                           double ambient_K) {
  LoadVector total;
  for (const auto& q : run_loads(p, temps, ambient_K)) total += q;
  total += p.active_loads;
  return total;
}

std::vector<SourceComparisonRow> compare_sources(const CableModel& cable,
                                                 const std::vector<SpanSegment>& spans,
                                                 const std::map<StageId, double>& temps,
                                                 double ambient_K) {
  if (!cable.manufacturer || cable.elements.empty()) {
    throw Error(ErrorCode::MissingSourceData,
                "cable '" + cable.name + "' lacks manufacturer or material data");
  }
  std::vector<SourceComparisonRow> rows;
  for (const auto& seg : spans) {
    double th = temperature_of(seg.hot, temps, ambient_K);
    double tc = temperature_of(seg.cold, temps, ambient_K);
    SourceComparisonRow r;
    r.segment = seg;
    r.manufacturer_W = segment_load(decompose_cable(cable, seg, CurveSource::Manufacturer), th, tc);
    r.material_W = segment_load(decompose_cable(cable, seg, CurveSource::MaterialReference), th, tc);
    rows.push_back(r);
  }
  return rows;
}

}  // namespace cryomap
