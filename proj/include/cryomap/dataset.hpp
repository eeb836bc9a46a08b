#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "cryomap/stage.hpp"

namespace cryomap {

enum class RecordFlag : std::uint8_t { DriftCorrected = 1u << 0, LimitTruncated = 1u << 1 };

struct MeasurementRecord {
  LoadVector applied;
  PlatformState state;
  std::optional<double> timestamp_s;
  std::optional<double> averaging_window_s;  // > 0 when present
  std::uint8_t flags = 0;

  bool has(RecordFlag f) const { return (flags & static_cast<std::uint8_t>(f)) != 0; }
  void set(RecordFlag f) { flags |= static_cast<std::uint8_t>(f); }
};

struct DatasetMetadata {
  std::string platform_id;
  std::string cooldown_id;
  /// Declared axis values per stage (W, ascending). Empty means "derive
  /// from the records".
  std::array<std::vector<double>, kStageCount> axes;
  std::string unit_system = "SI";
  std::vector<std::string> notes;
  /// Non-SI unit token a column was read in, keyed by column stem (e.g.
  /// "p_still" -> "mbar"). Columns read in SI have no entry.
  std::map<std::string, std::string> source_units;
  /// Any other keys found in the metadata document, preserved verbatim.
  nlohmann::ordered_json extra = nlohmann::ordered_json::object();
};

/// A non-standard table column, kept so that serialization can emit it again.
struct ExtraColumn {
  std::string name;
  std::vector<std::string> cells;
};

struct Dataset {
  std::vector<MeasurementRecord> records;
  DatasetMetadata metadata;
  std::vector<ExtraColumn> extra_columns;
  /// Whether p_cond / p_still / flow were present (dataset-wide).
  bool has_p_condenser = false;
  bool has_p_still = false;
  bool has_flow = false;

  bool has_field(Field f) const;
};

/// Parses a data table plus its metadata document; all quantities are
/// converted to SI. Errors: MissingColumn, BadNumber, BadUnit,
/// DuplicateRecord, UndeclaredAxisValue, BadDocument.
Dataset parse_dataset(std::istream& table, std::istream& metadata);
Dataset parse_dataset(const std::string& table_text, const std::string& metadata_text);

/// Reads `<dir>/dataset.csv` and `<dir>/metadata.json`.
Dataset load_dataset(const std::filesystem::path& dir);
void save_dataset(const Dataset& d, const std::filesystem::path& dir);

/// SI-unit table with 17 significant digits, so parse∘serialize is exact.
std::string serialize_table(const Dataset& d);
std::string serialize_metadata(const Dataset& d);

/// Checks the dataset invariants (axis membership, duplicate loads) and
/// fills in undeclared axes. Called by parse_dataset; exposed for datasets
/// assembled in code.
void finalize_dataset(Dataset& d);

struct AxisCoverage {
  std::size_t value_count = 0;
  double min_W = 0.0;
  double max_W = 0.0;

  bool operator==(const AxisCoverage&) const = default;
};

struct ValidationReport {
  bool no_data = false;
  std::size_t record_count = 0;
  std::array<AxisCoverage, kStageCount> coverage{};
  std::size_t axis_count = 0;  // non-collapsed axes
  std::size_t cell_count = 0;
  std::size_t invalid_cells = 0;
  std::vector<std::string> monotonicity_warnings;
  std::vector<std::string> ordering_warnings;
  std::vector<std::string> value_findings;

  bool operator==(const ValidationReport&) const = default;
};

ValidationReport validate_dataset(const Dataset& d);
std::string format_report(const ValidationReport& r);

/// Replaces the stage temperature T with T - rate*(t - reference_time) in
/// every record and flags it DRIFT_CORRECTED. Not idempotent; a metadata
/// note records how many records already carried the flag.
Dataset correct_drift(const Dataset& d, StageId stage, double rate_K_per_s,
                      double reference_time_s);

}  // namespace cryomap
