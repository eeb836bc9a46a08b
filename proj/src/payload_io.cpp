#include <algorithm>
#include <cstdlib>

#include <nlohmann/json.hpp>

#include "cryomap/error.hpp"
#include "cryomap/payload.hpp"
#include "cryomap/table_io.hpp"

namespace cryomap {

namespace {

using nlohmann::json;

json parse_json(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadDocument, std::string(what) + " is not valid JSON: " + e.what());
  }
}

std::shared_ptr<const MaterialCurve> material_named(const PayloadLibrary& lib, const std::string& name) {
  auto it = lib.materials.find(name);
  if (it == lib.materials.end()) throw Error(ErrorCode::MissingSourceData, "unknown material '" + name + "'");
  return it->second;
}

CableElement element_from(const json& j, const PayloadLibrary& lib) {
  CableElement e;
  e.role = j.value("role", "composite");
  e.material = material_named(lib, j.at("material").get<std::string>());
  e.area_m2 = j.at("area_m2").get<double>();
  if (!(e.area_m2 > 0.0)) throw Error(ErrorCode::BadDocument, "cable element area must be positive");
  return e;
}

StageId stage_from(const json& j) {
  auto s = parse_stage(j.get<std::string>());
  if (!s) throw Error(ErrorCode::BadDocument, "unknown stage '" + j.get<std::string>() + "'");
  return *s;
}

}  // namespace

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("CRYOMAP_DATA_DIR"); env && *env) return env;
  return CRYOMAP_DATA_DIR;
}

CableModel parse_cable(const std::string& json_text, const PayloadLibrary& lib) {
  auto j = parse_json(json_text, "cable document");
  try {
    CableModel c;
    c.name = j.at("name").get<std::string>();
    c.provenance = j.value("provenance", "");
    for (const auto& e : j.value("elements", json::array())) c.elements.push_back(element_from(e, lib));
    if (j.contains("manufacturer") && !j["manufacturer"].is_null()) {
      c.manufacturer = element_from(j["manufacturer"], lib);
    }
    if (c.elements.empty() && !c.manufacturer) {
      throw Error(ErrorCode::BadDocument, "cable '" + c.name + "' has no elements");
    }
    return c;
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadDocument, std::string("malformed cable document: ") + e.what());
  }
}

PayloadLibrary load_library(const std::filesystem::path& dir) {
  PayloadLibrary lib;
  auto sorted_files = [](const std::filesystem::path& d, const char* ext) {
    std::vector<std::filesystem::path> files;
    if (std::filesystem::is_directory(d)) {
      for (const auto& e : std::filesystem::directory_iterator(d)) {
        if (e.path().extension() == ext) files.push_back(e.path());
      }
    }
    std::sort(files.begin(), files.end());
    return files;
  };
  for (const auto& f : sorted_files(dir / "materials", ".csv")) {
    auto c = std::make_shared<MaterialCurve>(load_material_curve(f));
    lib.materials[c->name] = c;
  }
  for (const auto& f : sorted_files(dir / "cables", ".json")) {
    auto c = parse_cable(io::read_file(f), lib);
    lib.cables[c.name] = c;
  }
  return lib;
}

PayloadSpec parse_payload(const std::string& json_text, const PayloadLibrary& lib) {
  auto j = parse_json(json_text, "payload document");
  PayloadSpec p;
  try {
    p.name = j.value("name", "");
    p.notes = j.value("notes", "");
    for (const auto& r : j.value("runs", json::array())) {
      CableRun run;
      auto name = r.at("cable").get<std::string>();
      auto it = lib.cables.find(name);
      if (it == lib.cables.end()) throw Error(ErrorCode::MissingSourceData, "unknown cable '" + name + "'");
      run.cable = it->second;
      for (const auto& s : r.at("span")) run.span.push_back(stage_from(s));
      run.lengths_m = r.at("lengths_m").get<std::vector<double>>();
      auto count = r.value("count", 1);
      if (count < 1) throw Error(ErrorCode::InconsistentCoupling, "cable run count must be at least 1");
      run.count = static_cast<unsigned>(count);
      auto coupling = parse_coupling(r.value("coupling", "THERMALIZED_PER_STAGE"));
      if (!coupling) throw Error(ErrorCode::BadDocument, "unknown coupling configuration");
      run.coupling = *coupling;
      auto source = r.value("source", "material");
      if (source == "material") {
        run.source = CurveSource::MaterialReference;
      } else if (source == "manufacturer") {
        run.source = CurveSource::Manufacturer;
      } else {
        throw Error(ErrorCode::BadDocument, "run source must be 'material' or 'manufacturer'");
      }
      p.runs.push_back(std::move(run));
    }
    const json active = j.value("active_loads_W", json::object());
    for (const auto& [stage, watts] : active.items()) {
      auto s = parse_stage(stage);
      if (!s || *s == StageId::AMBIENT) throw Error(ErrorCode::BadDocument, "bad active load stage '" + stage + "'");
      double w = watts.get<double>();
      if (!(w >= 0.0)) throw Error(ErrorCode::BadNumber, "active loads must be non-negative");
      p.active_loads.set(*s, p.active_loads[*s] + w);
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::BadDocument, std::string("malformed payload document: ") + e.what());
  }
  validate_payload(p);
  return p;
}

PayloadSpec load_payload(const std::filesystem::path& path, const PayloadLibrary& lib) {
  return parse_payload(io::read_file(path), lib);
}

}  // namespace cryomap
