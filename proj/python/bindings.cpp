#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cmath>

#include "cryomap/archive.hpp"
#include "cryomap/capacity_map.hpp"
#include "cryomap/error.hpp"
#include "cryomap/overhead.hpp"
#include "cryomap/payload.hpp"
#include "cryomap/synthetic.hpp"

namespace py = pybind11;
using namespace cryomap;

namespace {

StageId to_stage(const std::string& name) {
  auto s = parse_stage(name);
  if (!s) throw Error(ErrorCode::InvalidArgument, "unknown stage '" + name + "'");
  return *s;
}

LoadVector to_loads(const std::map<std::string, double>& q) {
  LoadVector v;
  for (const auto& [name, w] : q) {
    StageId s = to_stage(name);
    if (s == StageId::AMBIENT) throw Error(ErrorCode::InvalidArgument, "AMBIENT carries no load");
    v.set(s, w);
  }
  return v;
}

py::dict from_loads(const LoadVector& q) {
  py::dict d;
  for (StageId s : kStages) d[py::str(std::string(stage_name(s)))] = q[s];
  return d;
}

py::dict from_state(const PlatformState& s) {
  py::dict d;
  for (Field f : kFields) {
    py::object v = std::isfinite(s[f]) ? py::object(py::float_(s[f])) : py::object(py::none());
    d[py::str(std::string(field_name(f)))] = v;
  }
  return d;
}

std::map<StageId, double> to_temps(const std::map<std::string, double>& t) {
  std::map<StageId, double> out;
  for (const auto& [name, v] : t) out[to_stage(name)] = v;
  return out;
}

const PayloadLibrary& library() {
  static const PayloadLibrary lib = load_library(default_data_dir());
  return lib;
}

}  // namespace

PYBIND11_MODULE(_cryomap, m) {
  m.doc() = "Capacity maps, payload heat loads and a synthetic dilution refrigerator";

  static py::exception<Error> exc(m, "CryomapError", PyExc_ValueError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const Error& e) {
      py::set_error(exc, (std::string(error_code_name(e.code())) + ": " + e.what()).c_str());
    }
  });

  py::list stages;
  for (StageId s : kStages) stages.append(std::string(stage_name(s)));
  m.attr("STAGES") = stages;

  m.def("data_dir", [] { return default_data_dir(); }, "Directory of the shipped data files");

  m.def(
      "synth_state", [](const std::map<std::string, double>& q) {
        return from_state(synth_state(SyntheticParams::defaults(), to_loads(q)));
      },
      py::arg("loads"), "Synthetic platform state for loads in W keyed by stage name");

  py::class_<Dataset>(m, "Dataset")
      .def_static("load", [](const std::filesystem::path& dir) { return load_dataset(dir); }, py::arg("path"))
      .def("save", [](const Dataset& d, const std::filesystem::path& dir) { save_dataset(d, dir); },
           py::arg("path"))
      .def("__len__", [](const Dataset& d) { return d.records.size(); })
      .def("table", [](const Dataset& d) { return serialize_table(d); }, "SI data table text");

  m.def(
      "simulate",
      [](const std::string& campaign, std::uint64_t seed, bool drift) {
        CampaignSpec c = CampaignSpec::preset(campaign);
        c.seed = seed;
        c.drift = drift;
        return run_campaign(SyntheticParams::defaults(), c);
      },
      py::arg("campaign") = "coarse", py::arg("seed") = 1, py::arg("drift") = false,
      "Run a preset synthetic campaign: 'dense', 'sparse' or 'coarse'");

  py::class_<CapacityMap>(m, "CapacityMap")
      .def_static("build", &CapacityMap::build, py::arg("dataset"))
      .def_static("load", [](const std::filesystem::path& p) { return load_archive(p); }, py::arg("path"))
      .def("save", [](const CapacityMap& c, const std::filesystem::path& p) { save_archive(c, p); },
           py::arg("path"))
      .def_property_readonly("node_count", [](const CapacityMap& c) { return c.grid().node_count(); })
      .def_property_readonly("valid_cells", [](const CapacityMap& c) { return c.grid().valid_cell_count(); })
      .def_property_readonly("invalid_cells", [](const CapacityMap& c) { return c.grid().invalid_cell_count(); })
      .def("axis", [](const CapacityMap& c, const std::string& s) { return c.grid().axis(to_stage(s)); },
           py::arg("stage"))
      .def(
          "query",
          [](const CapacityMap& c, const std::map<std::string, double>& q) {
            auto r = c.query(to_loads(q));
            py::dict d = from_state(r.state);
            d["containment"] = containment_name(r.containment);
            return d;
          },
          py::arg("loads"), "Interpolated state; keys are field names plus 'containment'")
      .def(
          "cooling_power_at",
          [](const CapacityMap& c, const std::string& stage, double target_K,
             const std::map<std::string, double>& fixed) {
            return cooling_power_at(c, to_stage(stage), target_K, to_loads(fixed));
          },
          py::arg("stage"), py::arg("target_K"), py::arg("fixed") = std::map<std::string, double>{})
      .def(
          "infer",
          [](const CapacityMap& c, const std::map<std::string, double>& observed_K, std::size_t starts) {
            auto r = infer_load(c, to_temps(observed_K), {}, starts);
            py::dict d;
            d["loads"] = from_loads(r.q);
            d["residual"] = r.residual;
            d["non_unique"] = r.non_unique;
            py::list alts;
            for (const auto& a : r.alternatives) alts.append(py::make_tuple(from_loads(a.q), a.residual));
            d["alternatives"] = alts;
            return d;
          },
          py::arg("observed_K"), py::arg("starts") = 8)
      .def(
          "slice",
          [](const CapacityMap& c, const std::string& x, const std::string& y, const std::string& field,
             const std::map<std::string, double>& fixed) {
            SliceSpec s;
            s.x = to_stage(x);
            s.y = to_stage(y);
            auto f = parse_field(field);
            if (!f) throw Error(ErrorCode::InvalidArgument, "unknown field '" + field + "'");
            s.field = *f;
            s.fixed = to_loads(fixed);
            auto t = slice(c, s);
            py::list rows;
            for (std::size_t iy = 0; iy < t.ys.size(); ++iy) {
              py::list row;
              for (std::size_t ix = 0; ix < t.xs.size(); ++ix) {
                const auto& v = t.at(ix, iy);
                row.append(v ? py::object(py::float_(*v)) : py::object(py::none()));
              }
              rows.append(row);
            }
            return py::make_tuple(t.xs, t.ys, rows);
          },
          py::arg("x"), py::arg("y"), py::arg("field"), py::arg("fixed") = std::map<std::string, double>{},
          "Returns (xs, ys, rows) with rows[iy][ix]; None marks a gap")
      .def(
          "max_stage_power",
          [](const CapacityMap& c, const std::string& stage, const std::map<std::string, double>& fixed) {
            auto r = max_stage_power(c, to_stage(stage), to_loads(fixed), OperationalLimits{});
            py::dict d;
            d["admissible_max_W"] = r.admissible_max_W;
            d["grid_step_W"] = r.grid_step_W;
            d["binding"] = r.binding;
            d["violated_at_minimum"] = r.violated_at_minimum;
            return d;
          },
          py::arg("stage"), py::arg("fixed") = std::map<std::string, double>{},
          "Headroom under the default limits");

  m.def(
      "conductivity",
      [](const std::string& material, double T) {
        auto it = library().materials.find(material);
        if (it == library().materials.end()) throw Error(ErrorCode::MissingSourceData, "unknown material");
        return conductivity(*it->second, T);
      },
      py::arg("material"), py::arg("T_K"), "Thermal conductivity of a shipped curve, W/(m K)");

  m.def(
      "conduction_load",
      [](const std::string& material, double area_m2, double length_m, double T_hot, double T_cold) {
        auto it = library().materials.find(material);
        if (it == library().materials.end()) throw Error(ErrorCode::MissingSourceData, "unknown material");
        ConductorLink link{it->second, area_m2, length_m, StageId::AMBIENT, StageId::PT1};
        return conduction_load(link, T_hot, T_cold);
      },
      py::arg("material"), py::arg("area_m2"), py::arg("length_m"), py::arg("T_hot_K"), py::arg("T_cold_K"));

  m.def(
      "aggregate_loads",
      [](const std::filesystem::path& payload, const std::map<std::string, double>& temps_K, double ambient_K) {
        return from_loads(aggregate_loads(load_payload(payload, library()), to_temps(temps_K), ambient_K));
      },
      py::arg("payload"), py::arg("temps_K"), py::arg("ambient_K") = 295.0,
      "Per-stage loads (W) of a payload document at the given stage temperatures");
}
