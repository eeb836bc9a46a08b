#include "cryomap/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "cryomap/error.hpp"
#include "cryomap/grid.hpp"
#include "cryomap/table_io.hpp"
#include "cryomap/units.hpp"

namespace cryomap {

namespace {

using json = nlohmann::ordered_json;

enum class ColumnKind { Load, Temperature, PCond, PStill, Flow, Timestamp, Window, Flags, Extra };

struct Column {
  ColumnKind kind = ColumnKind::Extra;
  StageId stage = StageId::PT1;
  std::string unit;
};

bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

Column classify(const std::string& name) {
  if (name == "timestamp_s") return {ColumnKind::Timestamp, StageId::PT1, "s"};
  if (name == "avg_window_s") return {ColumnKind::Window, StageId::PT1, "s"};
  if (name == "flags") return {ColumnKind::Flags, StageId::PT1, ""};

  auto with_unit = [&](std::string_view stem, ColumnKind kind, units::Quantity q,
                       StageId stage) -> std::optional<Column> {
    std::string prefix = std::string(stem) + "_";
    if (!starts_with(name, prefix)) return std::nullopt;
    std::string unit = name.substr(prefix.size());
    if (!units::is_accepted(unit) || units::quantity_of(unit) != q) {
      throw Error(ErrorCode::BadUnit,
                  "column '" + name + "': unit token '" + unit + "' is not accepted here");
    }
    return Column{kind, stage, unit};
  };

  for (StageId s : kStages) {
    std::string tok(stage_token(s));
    if (auto c = with_unit("q_" + tok, ColumnKind::Load, units::Quantity::Power, s)) return *c;
    if (auto c = with_unit("t_" + tok, ColumnKind::Temperature, units::Quantity::Temperature, s))
      return *c;
  }
  if (auto c = with_unit("p_cond", ColumnKind::PCond, units::Quantity::Pressure, StageId::PT1))
    return *c;
  if (auto c = with_unit("p_still", ColumnKind::PStill, units::Quantity::Pressure, StageId::PT1))
    return *c;
  if (auto c = with_unit("flow", ColumnKind::Flow, units::Quantity::Flow, StageId::PT1)) return *c;
  return {};
}

std::uint8_t parse_flags(const std::string& cell) {
  std::uint8_t flags = 0;
  if (cell.empty()) return flags;
  for (const auto& tok : io::split(cell, ';')) {
    if (tok.empty()) continue;
    if (tok == "DRIFT_CORRECTED") {
      flags |= static_cast<std::uint8_t>(RecordFlag::DriftCorrected);
    } else if (tok == "LIMIT_TRUNCATED") {
      flags |= static_cast<std::uint8_t>(RecordFlag::LimitTruncated);
    } else {
      throw Error(ErrorCode::BadDocument, "unknown record flag '" + tok + "'");
    }
  }
  return flags;
}

std::string format_flags(std::uint8_t flags) {
  std::string out;
  if (flags & static_cast<std::uint8_t>(RecordFlag::DriftCorrected)) out += "DRIFT_CORRECTED";
  if (flags & static_cast<std::uint8_t>(RecordFlag::LimitTruncated)) {
    if (!out.empty()) out += ';';
    out += "LIMIT_TRUNCATED";
  }
  return out;
}

DatasetMetadata parse_metadata(const std::string& text) {
  DatasetMetadata m;
  if (io::trim(text).empty()) return m;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::BadDocument, std::string("metadata document: ") + e.what());
  }
  if (!doc.is_object()) throw Error(ErrorCode::BadDocument, "metadata document must be an object");
  try {
    for (auto& [key, value] : doc.items()) {
      if (key == "platform_id") {
        m.platform_id = value.get<std::string>();
      } else if (key == "cooldown_id") {
        m.cooldown_id = value.get<std::string>();
      } else if (key == "unit_system") {
        m.unit_system = value.get<std::string>();
      } else if (key == "axes_W") {
        for (auto& [stage, arr] : value.items()) {
          auto s = parse_stage(stage);
          if (!s || *s == StageId::AMBIENT) {
            throw Error(ErrorCode::BadDocument, "axes_W: unknown stage '" + stage + "'");
          }
          auto values = arr.get<std::vector<double>>();
          std::sort(values.begin(), values.end());
          m.axes[index(*s)] = std::move(values);
        }
      } else if (key == "notes") {
        if (value.is_string()) {
          m.notes.push_back(value.get<std::string>());
        } else {
          m.notes = value.get<std::vector<std::string>>();
        }
      } else if (key == "source_units") {
        m.source_units = value.get<std::map<std::string, std::string>>();
      } else {
        m.extra[key] = value;
      }
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadDocument, std::string("metadata document: ") + e.what());
  }
  return m;
}

std::string column_stem(const Column& c) {
  switch (c.kind) {
    case ColumnKind::Load: return "q_" + std::string(stage_token(c.stage));
    case ColumnKind::Temperature: return "t_" + std::string(stage_token(c.stage));
    case ColumnKind::PCond: return "p_cond";
    case ColumnKind::PStill: return "p_still";
    case ColumnKind::Flow: return "flow";
    default: return {};
  }
}

}  // namespace

bool Dataset::has_field(Field f) const {
  switch (f) {
    case Field::P_COND: return has_p_condenser;
    case Field::P_STILL: return has_p_still;
    case Field::FLOW: return has_flow;
    default: return true;
  }
}

void finalize_dataset(Dataset& d) {
  auto& axes = d.metadata.axes;
  for (StageId s : kStages) {
    auto& axis = axes[index(s)];
    if (axis.empty()) {
      std::vector<double> values;
      for (const auto& r : d.records) values.push_back(r.applied[s]);
      axis = cluster_axis(std::move(values));
    } else {
      std::sort(axis.begin(), axis.end());
    }
  }

  std::unordered_set<std::string> seen;
  seen.reserve(d.records.size());
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    std::string key;
    for (StageId s : kStages) {
      auto pos = snap_to_axis(axes[index(s)], d.records[i].applied[s]);
      if (!pos) {
        throw Error(ErrorCode::UndeclaredAxisValue,
                    "record " + std::to_string(i) + ": " + std::string(stage_name(s)) +
                        " load " + io::format_double(d.records[i].applied[s]) +
                        " W is not on the declared axis",
                    s);
      }
      key += std::to_string(*pos);
      key += ',';
    }
    if (!seen.insert(key).second) {
      throw Error(ErrorCode::DuplicateRecord,
                  "record " + std::to_string(i) + " duplicates the load vector of an earlier row");
    }
  }
}

Dataset parse_dataset(std::istream& table, std::istream& metadata) {
  std::ostringstream meta;
  meta << metadata.rdbuf();

  Dataset d;
  d.metadata = parse_metadata(meta.str());

  auto text = io::read_delimited(table);
  std::vector<Column> cols;
  cols.reserve(text.header.size());
  std::array<int, kStageCount> load_col{-1, -1, -1, -1, -1};
  std::array<int, kStageCount> temp_col{-1, -1, -1, -1, -1};
  for (std::size_t c = 0; c < text.header.size(); ++c) {
    Column col = classify(text.header[c]);
    if (col.kind == ColumnKind::Load) load_col[index(col.stage)] = static_cast<int>(c);
    if (col.kind == ColumnKind::Temperature) temp_col[index(col.stage)] = static_cast<int>(c);
    if (col.kind == ColumnKind::PCond) d.has_p_condenser = true;
    if (col.kind == ColumnKind::PStill) d.has_p_still = true;
    if (col.kind == ColumnKind::Flow) d.has_flow = true;
    if (col.kind == ColumnKind::Extra) d.extra_columns.push_back({text.header[c], {}});
    auto stem = column_stem(col);
    if (!stem.empty() && units::to_si(1.0, col.unit) != 1.0) d.metadata.source_units[stem] = col.unit;
    cols.push_back(col);
  }
  for (StageId s : kStages) {
    if (load_col[index(s)] < 0) {
      throw Error(ErrorCode::MissingColumn,
                  "missing mandatory column q_" + std::string(stage_token(s)) + "_<unit>", s);
    }
    if (temp_col[index(s)] < 0) {
      throw Error(ErrorCode::MissingColumn,
                  "missing mandatory column t_" + std::string(stage_token(s)) + "_<unit>", s);
    }
  }

  d.records.reserve(text.rows.size());
  for (std::size_t r = 0; r < text.rows.size(); ++r) {
    const auto& row = text.rows[r];
    if (row.size() != cols.size()) {
      throw Error(ErrorCode::BadDocument, "row " + std::to_string(r + 1) + " has " +
                                              std::to_string(row.size()) + " cells, header has " +
                                              std::to_string(cols.size()));
    }
    MeasurementRecord rec;
    std::size_t extra = 0;
    for (std::size_t c = 0; c < cols.size(); ++c) {
      const auto& col = cols[c];
      const std::string& cell = row[c];
      std::string ctx = "row " + std::to_string(r + 1) + ", column " + text.header[c];
      switch (col.kind) {
        case ColumnKind::Load: {
          double w = units::to_si(io::parse_double(cell, ctx), col.unit);
          if (!std::isfinite(w) || w < 0.0) {
            throw Error(ErrorCode::BadNumber, "negative or non-finite power (" + ctx + ")",
                        col.stage);
          }
          rec.applied.set(col.stage, w);
          break;
        }
        case ColumnKind::Temperature:
          rec.state.set_temperature(col.stage, units::to_si(io::parse_double(cell, ctx), col.unit));
          break;
        case ColumnKind::PCond:
          rec.state[Field::P_COND] = units::to_si(io::parse_double(cell, ctx), col.unit);
          break;
        case ColumnKind::PStill:
          rec.state[Field::P_STILL] = units::to_si(io::parse_double(cell, ctx), col.unit);
          break;
        case ColumnKind::Flow:
          rec.state[Field::FLOW] = units::to_si(io::parse_double(cell, ctx), col.unit);
          break;
        case ColumnKind::Timestamp:
          if (!cell.empty()) rec.timestamp_s = io::parse_double(cell, ctx);
          break;
        case ColumnKind::Window:
          if (!cell.empty()) rec.averaging_window_s = io::parse_double(cell, ctx);
          break;
        case ColumnKind::Flags:
          rec.flags = parse_flags(cell);
          break;
        case ColumnKind::Extra:
          d.extra_columns[extra++].cells.push_back(cell);
          break;
      }
    }
    d.records.push_back(rec);
  }
  if (!d.extra_columns.empty()) {
    std::string names;
    for (const auto& e : d.extra_columns) names += (names.empty() ? "" : ", ") + e.name;
    d.metadata.notes.push_back("unrecognised columns preserved: " + names);
  }

  finalize_dataset(d);
  return d;
}

Dataset parse_dataset(const std::string& table_text, const std::string& metadata_text) {
  std::istringstream t(table_text), m(metadata_text);
  return parse_dataset(t, m);
}

Dataset load_dataset(const std::filesystem::path& dir) {
  auto table = dir / "dataset.csv";
  auto meta = dir / "metadata.json";
  std::ifstream t(table);
  if (!t) throw Error(ErrorCode::Io, "cannot open " + table.string());
  std::string meta_text = std::filesystem::exists(meta) ? io::read_file(meta) : std::string();
  std::istringstream m(meta_text);
  return parse_dataset(t, m);
}

void save_dataset(const Dataset& d, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  io::write_file_atomic(dir / "dataset.csv", serialize_table(d));
  io::write_file_atomic(dir / "metadata.json", serialize_metadata(d));
}

std::string serialize_table(const Dataset& d) {
  bool any_ts = false, any_window = false;
  for (const auto& r : d.records) {
    any_ts = any_ts || r.timestamp_s.has_value();
    any_window = any_window || r.averaging_window_s.has_value();
  }

  std::string out;
  auto sep = [&](bool& first) {
    if (!first) out += ',';
    first = false;
  };
  bool first = true;
  for (StageId s : kStages) {
    sep(first);
    out += "q_" + std::string(stage_token(s)) + "_W";
  }
  for (StageId s : kStages) out += ",t_" + std::string(stage_token(s)) + "_K";
  if (d.has_p_condenser) out += ",p_cond_Pa";
  if (d.has_p_still) out += ",p_still_Pa";
  if (d.has_flow) out += ",flow_mol_s";
  if (any_ts) out += ",timestamp_s";
  if (any_window) out += ",avg_window_s";
  out += ",flags";
  for (const auto& e : d.extra_columns) out += "," + e.name;
  out += '\n';

  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    first = true;
    for (StageId s : kStages) {
      sep(first);
      out += io::format_double(r.applied[s]);
    }
    for (StageId s : kStages) out += "," + io::format_double(r.state.temperature(s));
    if (d.has_p_condenser) out += "," + io::format_double(r.state.p_condenser());
    if (d.has_p_still) out += "," + io::format_double(r.state.p_still());
    if (d.has_flow) out += "," + io::format_double(r.state.flow());
    if (any_ts) out += "," + (r.timestamp_s ? io::format_double(*r.timestamp_s) : std::string());
    if (any_window) {
      out += "," + (r.averaging_window_s ? io::format_double(*r.averaging_window_s) : std::string());
    }
    out += "," + format_flags(r.flags);
    for (const auto& e : d.extra_columns) out += "," + (i < e.cells.size() ? e.cells[i] : "");
    out += '\n';
  }
  return out;
}

std::string serialize_metadata(const Dataset& d) {
  json doc = json::object();
  const auto& m = d.metadata;
  doc["platform_id"] = m.platform_id;
  doc["cooldown_id"] = m.cooldown_id;
  doc["unit_system"] = m.unit_system;
  json axes = json::object();
  for (StageId s : kStages) axes[std::string(stage_name(s))] = m.axes[index(s)];
  doc["axes_W"] = axes;
  doc["notes"] = m.notes;
  doc["source_units"] = m.source_units;
  for (auto& [k, v] : m.extra.items()) doc[k] = v;
  return doc.dump(2) + "\n";
}

ValidationReport validate_dataset(const Dataset& d) {
  ValidationReport rep;
  rep.record_count = d.records.size();
  if (d.records.empty()) {
    rep.no_data = true;
    rep.value_findings.push_back("no data");
    return rep;
  }

  constexpr std::size_t kMaxMessages = 50;
  std::size_t mono_extra = 0, order_extra = 0, value_extra = 0;
  auto push = [&](std::vector<std::string>& list, std::size_t& extra, std::string msg) {
    if (list.size() < kMaxMessages) {
      list.push_back(std::move(msg));
    } else {
      ++extra;
    }
  };

  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    std::string where = "record " + std::to_string(i);
    for (StageId s : kStages) {
      double t = r.state.temperature(s);
      if (!std::isfinite(t) || t <= 0.0) {
        push(rep.value_findings, value_extra,
             where + ": T(" + std::string(stage_name(s)) + ") = " + io::format_double(t));
      }
    }
    for (Field f : {Field::P_COND, Field::P_STILL, Field::FLOW}) {
      if (!d.has_field(f)) continue;
      double v = r.state[f];
      if (!std::isfinite(v) || v < 0.0) {
        push(rep.value_findings, value_extra,
             where + ": " + std::string(field_name(f)) + " = " + io::format_double(v));
      }
    }
    if (r.averaging_window_s && !(*r.averaging_window_s > 0.0)) {
      push(rep.value_findings, value_extra, where + ": non-positive averaging window");
    }
    if (!r.state.stage_order_ok()) {
      push(rep.ordering_warnings, order_extra, where + ": stage temperatures not ordered warm to cold");
    }
  }

  GridIndex g;
  try {
    g = to_grid(d);
  } catch (const Error& e) {
    rep.value_findings.push_back(e.what());
    return rep;
  }
  for (StageId s : kStages) {
    const auto& axis = g.axis(s);
    auto& cov = rep.coverage[index(s)];
    cov.value_count = axis.size();
    cov.min_W = axis.front();
    cov.max_W = axis.back();
  }
  rep.axis_count = g.active_stages().size();
  rep.cell_count = g.cell_count();
  rep.invalid_cells = g.invalid_cell_count();

  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& node = g.node_of_record(i);
    for (StageId s : g.active_stages()) {
      NodeIndex next = node;
      ++next[index(s)];
      if (next[index(s)] >= g.axis(s).size()) continue;
      auto j = g.record_at(next);
      if (!j) continue;
      double t0 = d.records[i].state.temperature(s);
      double t1 = d.records[*j].state.temperature(s);
      if (t1 < t0) {
        push(rep.monotonicity_warnings, mono_extra,
             "T(" + std::string(stage_name(s)) + ") decreases from " + io::format_double(t0) +
                 " K to " + io::format_double(t1) + " K between records " + std::to_string(i) +
                 " and " + std::to_string(*j));
      }
    }
  }

  auto tail = [](std::vector<std::string>& list, std::size_t extra) {
    if (extra) list.push_back("... and " + std::to_string(extra) + " more");
  };
  tail(rep.monotonicity_warnings, mono_extra);
  tail(rep.ordering_warnings, order_extra);
  tail(rep.value_findings, value_extra);
  return rep;
}

std::string format_report(const ValidationReport& r) {
  std::ostringstream out;
  if (r.no_data) {
    out << "no data: 0 records, 0 axes\n";
    return out.str();
  }
  out << "records: " << r.record_count << "\n";
  for (StageId s : kStages) {
    const auto& c = r.coverage[index(s)];
    out << "  axis " << stage_name(s) << ": " << c.value_count << " values in [" << c.min_W
        << ", " << c.max_W << "] W\n";
  }
  out << "non-collapsed axes: " << r.axis_count << "\n";
  out << "cells: " << r.cell_count << " (" << r.invalid_cells << " invalid)\n";
  auto list = [&](const char* title, const std::vector<std::string>& items) {
    out << title << ": " << items.size() << "\n";
    for (const auto& m : items) out << "  - " << m << "\n";
  };
  list("monotonicity warnings", r.monotonicity_warnings);
  list("stage-ordering warnings", r.ordering_warnings);
  list("value findings", r.value_findings);
  return out.str();
}

Dataset correct_drift(const Dataset& d, StageId stage, double rate_K_per_s,
                      double reference_time_s) {
  if (stage == StageId::AMBIENT) {
    throw Error(ErrorCode::InvalidArgument, "drift correction needs a refrigerator stage");
  }
  if (!std::isfinite(rate_K_per_s) || !std::isfinite(reference_time_s)) {
    throw Error(ErrorCode::InvalidArgument, "drift rate and reference time must be finite");
  }
  Dataset out = d;
  std::size_t prior = 0;
  for (std::size_t i = 0; i < out.records.size(); ++i) {
    auto& r = out.records[i];
    if (!r.timestamp_s) {
      throw Error(ErrorCode::MissingTimestamp,
                  "record " + std::to_string(i) + " has no timestamp; drift correction needs one");
    }
    if (r.has(RecordFlag::DriftCorrected)) ++prior;
    double t = r.state.temperature(stage);
    r.state.set_temperature(stage, t - rate_K_per_s * (*r.timestamp_s - reference_time_s));
    r.set(RecordFlag::DriftCorrected);
  }
  std::ostringstream note;
  note << "drift correction on " << stage_name(stage) << ": rate " << io::format_double(rate_K_per_s)
       << " K/s, reference " << io::format_double(reference_time_s) << " s";
  if (prior) note << "; " << prior << " records were already DRIFT_CORRECTED";
  out.metadata.notes.push_back(note.str());
  return out;
}

}  // namespace cryomap
