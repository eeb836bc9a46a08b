#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "cryomap/material.hpp"
#include "cryomap/stage.hpp"

namespace cryomap {

enum class Coupling { ThermalizedPerStage, ContinuousSpan, OuterOnlyThermalized };

const char* coupling_name(Coupling c);
std::optional<Coupling> parse_coupling(std::string_view text);

struct CableElement {
  std::string role;  // "inner", "dielectric", "outer"
  std::shared_ptr<const MaterialCurve> material;
  double area_m2 = 0.0;
};

/// A cable as parallel single-material elements, plus an optional
/// whole-cable effective curve referred to `manufacturer->area_m2`.
struct CableModel {
  std::string name;
  std::vector<CableElement> elements;
  std::optional<CableElement> manufacturer;
  std::string provenance;
};

struct SpanSegment {
  StageId hot;
  StageId cold;
  double length_m;
};

struct CableRun {
  CableModel cable;
  std::vector<StageId> span;     // warm to cold, may start at AMBIENT
  std::vector<double> lengths_m;  // one per segment
  unsigned count = 1;
  Coupling coupling = Coupling::ThermalizedPerStage;
  CurveSource source = CurveSource::MaterialReference;

  std::vector<SpanSegment> segments() const;
};

struct PayloadSpec {
  std::string name;
  std::string notes;
  std::vector<CableRun> runs;
  LoadVector active_loads;
};

/// Throws InconsistentCoupling (span/lengths mismatch, not warm to cold,
/// count 0) or MissingSourceData.
void validate_payload(const PayloadSpec& p);

/// One link per element (material mode) or a single composite link
/// (manufacturer mode). Errors: MissingSourceData.
std::vector<ConductorLink> decompose_cable(const CableModel& cable, const SpanSegment& segment,
                                           CurveSource source);

/// Per-stage passive plus active load (W). Each segment deposits on its
/// cold endpoint; segments whose hot end is not warmer than the cold end
/// contribute nothing. Errors: MissingTemperature, InconsistentCoupling,
/// InvalidArgument (ambient not above PT1).
LoadVector aggregate_loads(const PayloadSpec& p, const std::map<StageId, double>& temps,
                           double ambient_K = 295.0);

/// Per-run, per-stage passive loads (W, already multiplied by count).
std::vector<LoadVector> run_loads(const PayloadSpec& p, const std::map<StageId, double>& temps,
                                  double ambient_K = 295.0);

struct SourceComparisonRow {
  SpanSegment segment;
  double manufacturer_W = 0.0;  // per wire
  double material_W = 0.0;      // per wire
};

/// Errors: MissingSourceData when either source is unavailable.
std::vector<SourceComparisonRow> compare_sources(const CableModel& cable,
                                                 const std::vector<SpanSegment>& spans,
                                                 const std::map<StageId, double>& temps,
                                                 double ambient_K = 295.0);

/// Curves and cables available to payload documents, keyed by name.
struct PayloadLibrary {
  std::map<std::string, std::shared_ptr<const MaterialCurve>> materials;
  std::map<std::string, CableModel> cables;
};

/// Directory holding the shipped materials/, cables/ and payloads/ data.
std::filesystem::path default_data_dir();

/// Reads `<dir>/materials/*.csv` and `<dir>/cables/*.json`.
PayloadLibrary load_library(const std::filesystem::path& dir);
CableModel parse_cable(const std::string& json_text, const PayloadLibrary& lib);
PayloadSpec parse_payload(const std::string& json_text, const PayloadLibrary& lib);
PayloadSpec load_payload(const std::filesystem::path& path, const PayloadLibrary& lib);

}  // namespace cryomap
