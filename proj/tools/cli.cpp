#include "cli.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cryomap/archive.hpp"
#include "cryomap/capacity_map.hpp"
#include "cryomap/dataset.hpp"
#include "cryomap/equilibrium.hpp"
#include "cryomap/error.hpp"
#include "cryomap/linear_model.hpp"
#include "cryomap/overhead.hpp"
#include "cryomap/payload.hpp"
#include "cryomap/svg.hpp"
#include "cryomap/synthetic.hpp"
#include "cryomap/table_io.hpp"

namespace cryomap::cli {

namespace {

namespace fs = std::filesystem;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Unit {
  const char* suffix;
  double divisor;
};
constexpr Unit kPowerUnits[] = {{"W", 1.0}, {"mW", 1e3}, {"uW", 1e6}};

// --q-<stage>-<unit> flags; at most one unit per stage.
struct PowerFlags {
  std::array<std::array<std::optional<double>, 3>, kStageCount> values;

  void add(CLI::App* app, const std::string& what) {
    for (StageId s : kStages) {
      for (std::size_t u = 0; u < 3; ++u) {
        std::string name = "--q-" + std::string(stage_token(s)) + "-" + kPowerUnits[u].suffix;
        app->add_option(name, values[index(s)][u],
                        what + " on " + std::string(stage_name(s)) + " in " + kPowerUnits[u].suffix);
      }
    }
  }

  LoadVector resolve() const {
    LoadVector q;
    for (StageId s : kStages) {
      int given = 0;
      for (std::size_t u = 0; u < 3; ++u) {
        if (!values[index(s)][u]) continue;
        ++given;
        double v = *values[index(s)][u];
        if (!(std::isfinite(v) && v >= 0.0)) {
          throw UsageError("power on " + std::string(stage_name(s)) + " must be finite and non-negative");
        }
        q.set(s, v / kPowerUnits[u].divisor);
      }
      if (given > 1) throw UsageError("power on " + std::string(stage_name(s)) + " given more than once");
    }
    return q;
  }
};

StageId stage_arg(const std::string& text) {
  auto s = parse_stage(text);
  if (!s || *s == StageId::AMBIENT) throw UsageError("unknown stage '" + text + "'");
  return *s;
}

Field field_arg(const std::string& text) {
  auto f = parse_field(text);
  if (!f) throw UsageError("unknown field '" + text + "'");
  return *f;
}

bool has_extension(const fs::path& p, const char* ext) { return p.extension() == ext; }

std::map<StageId, double> read_observed(const fs::path& path) {
  std::istringstream in(io::read_file(path));
  auto doc = io::read_delimited(in);
  if (doc.header.size() != 2 || io::trim(doc.header[0]) != "stage" || io::trim(doc.header[1]) != "T_K") {
    throw Error(ErrorCode::MissingColumn, "observed temperature table needs columns stage,T_K");
  }
  std::map<StageId, double> obs;
  for (const auto& row : doc.rows) {
    if (row.size() != 2) throw Error(ErrorCode::BadDocument, "observed row must have two fields");
    auto s = parse_stage(io::trim(row[0]));
    if (!s || *s == StageId::AMBIENT) {
      throw Error(ErrorCode::BadDocument, "unknown stage '" + row[0] + "' in observed table");
    }
    obs[*s] = io::parse_double(row[1], "T_K");
  }
  if (obs.empty()) throw Error(ErrorCode::EmptyDataset, "observed temperature table is empty");
  return obs;
}

OperationalLimits limits_arg(const std::string& path) {
  if (path.empty()) return OperationalLimits{};
  return parse_limits(io::read_file(path));
}

std::string format_state(const PlatformState& s, bool with_circulation) {
  std::ostringstream o;
  o << std::setprecision(6);
  for (StageId st : kStages) o << "  T_" << stage_name(st) << " = " << s.temperature(st) << " K\n";
  if (with_circulation) {
    for (Field f : {Field::P_COND, Field::P_STILL, Field::FLOW}) {
      if (std::isfinite(s[f])) o << "  " << field_name(f) << " = " << s[f] << " " << field_unit(f) << "\n";
    }
  }
  return o.str();
}

std::string format_loads(const LoadVector& q) {
  std::ostringstream o;
  o << std::setprecision(6);
  for (StageId s : kStages) o << "  Q_" << stage_name(s) << " = " << q[s] << " W\n";
  return o.str();
}

nlohmann::ordered_json state_json(const PlatformState& s) {
  nlohmann::ordered_json j;
  for (Field f : kFields) {
    j[std::string(field_name(f)) + "_" + std::string(field_unit(f))] =
        std::isfinite(s[f]) ? nlohmann::ordered_json(s[f]) : nlohmann::ordered_json(nullptr);
  }
  return j;
}

nlohmann::ordered_json loads_json(const LoadVector& q) {
  nlohmann::ordered_json j;
  for (StageId s : kStages) j[std::string(stage_name(s))] = q[s];
  return j;
}

nlohmann::ordered_json infer_json(const InferResult& r) {
  nlohmann::ordered_json j;
  j["inferred_loads_W"] = loads_json(r.q);
  j["residual"] = r.residual;
  j["non_unique"] = r.non_unique;
  auto alts = nlohmann::ordered_json::array();
  for (const auto& a : r.alternatives) alts.push_back({{"loads_W", loads_json(a.q)}, {"residual", a.residual}});
  j["alternatives"] = alts;
  j["evaluations"] = r.evaluations;
  return j;
}

std::string format_infer(const InferResult& r) {
  std::ostringstream o;
  o << "inferred loads:\n" << format_loads(r.q) << "weighted RMS residual: " << r.residual << "\n";
  if (r.non_unique) o << "non-unique: " << r.alternatives.size() << " alternative minima within 2x\n";
  return o.str();
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"cryomap: dilution refrigerator capacity maps and heat-load budgets.\n"
               "Powers are in W unless a flag names another unit; temperatures in K, pressures in Pa, "
               "flow in mol/s."};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  // simulate
  std::string params_arg = "default", campaign_arg = "dense", out_path;
  std::optional<std::uint64_t> seed;
  bool drift = false;
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic measurement campaign dataset directory");
  sim->add_option("--params", params_arg, "'default' or a JSON parameter document")->capture_default_str();
  sim->add_option("--campaign", campaign_arg, "dense, sparse, coarse or a JSON campaign document")
      ->capture_default_str();
  sim->add_option("--seed", seed, "Noise seed (overrides the campaign)");
  sim->add_flag("--drift", drift, "Inject PT1 drift (K/s from the parameters)");
  sim->add_option("--out", out_path, "Output dataset directory")->required();

  // validate
  std::string data_dir;
  auto* val = app.add_subcommand("validate", "Check a dataset directory and report coverage and findings");
  val->add_option("--data", data_dir, "Dataset directory (dataset.csv + metadata.json)")->required();
  val->add_option("--out", out_path, "Optional report file");

  // build
  auto* bld = app.add_subcommand("build", "Build a capacity map archive from a dataset directory");
  bld->add_option("--data", data_dir, "Dataset directory")->required();
  bld->add_option("--out", out_path, "Output map archive")->required();

  // query
  std::string map_path;
  PowerFlags qflags;
  auto* qry = app.add_subcommand("query", "Interpolate the platform state at a loading scenario");
  qry->add_option("map", map_path, "Map archive")->required();
  qflags.add(qry, "Applied power");
  qry->add_option("--out", out_path, "Optional JSON output");

  // slice
  std::string x_arg = "PT2", y_arg = "PT1", field_text = "t_stl", csv_path;
  PowerFlags sflags;
  auto* slc = app.add_subcommand("slice", "Two-dimensional slice of one field as SVG heatmap or table");
  slc->add_option("map", map_path, "Map archive")->required();
  slc->add_option("--x", x_arg, "Varying stage on the x axis")->capture_default_str();
  slc->add_option("--y", y_arg, "Varying stage on the y axis")->capture_default_str();
  slc->add_option("--field", field_text, "t_<stage> (K), p_cond, p_still (Pa) or flow (mol/s)")
      ->capture_default_str();
  sflags.add(slc, "Fixed power");
  slc->add_option("--out", out_path, "Output .svg heatmap or delimited table")->required();
  slc->add_option("--csv", csv_path, "Also write the x_W,y_W,value table here");

  // fit-linear
  double fraction = 0.1;
  auto* fit = app.add_subcommand("fit-linear", "Fit the linear interstage coupling model");
  fit->add_option("--data", data_dir, "Dataset directory")->required();
  fit->add_option("--fraction", fraction, "Small-load fraction of each axis maximum")->capture_default_str();
  fit->add_option("--out", out_path, "Residual table output")->required();

  // payload
  std::string spec_path, temps_from, observed_path, limits_path, library_dir;
  bool equilibrium = false, infer = false;
  double ambient = 295.0, alpha = 0.5, tol = 1e-4;
  unsigned max_iter = 100;
  std::size_t starts = 8;
  auto* pay = app.add_subcommand("payload", "Payload heat loads, equilibrium solve or load inference");
  pay->add_option("--spec", spec_path, "Payload document")->required();
  pay->add_option("--temps-from", temps_from, "Map archive providing stage temperatures")->required();
  auto* eq_flag = pay->add_flag("--equilibrium", equilibrium, "Solve for the equilibrium state");
  auto* inf_flag = pay->add_flag("--infer", infer, "Infer loads from observed temperatures");
  eq_flag->excludes(inf_flag);
  pay->add_option("--observed", observed_path, "Observed temperatures table (stage,T_K)");
  pay->add_option("--ambient-K", ambient, "Ambient temperature in K")->capture_default_str();
  pay->add_option("--alpha", alpha, "Damping in (0, 1]")->capture_default_str();
  pay->add_option("--tol", tol, "Relative tolerance on T and Q")->capture_default_str();
  pay->add_option("--max-iter", max_iter, "Maximum iterations")->capture_default_str();
  pay->add_option("--starts", starts, "Inference multi-start count")->capture_default_str();
  pay->add_option("--limits", limits_path, "Limits document (JSON: K and Pa)");
  pay->add_option("--library", library_dir, "Data directory with materials/ and cables/");
  pay->add_option("--out", out_path, "Report output")->required();

  // infer
  auto* inf = app.add_subcommand("infer", "Infer the loading scenario behind observed temperatures");
  inf->add_option("map", map_path, "Map archive")->required();
  inf->add_option("--observed", observed_path, "Observed temperatures table (stage,T_K)")->required();
  inf->add_option("--starts", starts, "Multi-start count")->capture_default_str();
  inf->add_option("--out", out_path, "JSON output")->required();

  // headroom
  std::string stage_text = "STL", surf_x, surf_y, svg_path;
  PowerFlags hflags;
  auto* hdr = app.add_subcommand("headroom", "Admissible power on one stage under operational limits");
  hdr->add_option("map", map_path, "Map archive")->required();
  hdr->add_option("--stage", stage_text, "Stage whose power is raised")->capture_default_str();
  hflags.add(hdr, "Fixed power");
  hdr->add_option("--limits", limits_path, "Limits document (JSON: K and Pa)");
  hdr->add_option("--out", out_path, "Report table output")->required();
  hdr->add_option("--surface-x", surf_x, "With --surface-y: admissibility over a plane");
  hdr->add_option("--surface-y", surf_y, "Second varying stage of the plane");
  hdr->add_option("--svg", svg_path, "Admissibility map SVG output (needs the surface stages)");

  // diff
  std::string map_b;
  auto* dif = app.add_subcommand("diff", "Per-node differences b - a between two maps");
  dif->add_option("a", map_path, "Reference map archive")->required();
  dif->add_option("b", map_b, "Compared map archive")->required();
  dif->add_option("--out", out_path, "Difference table output")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  try {
    if (sim->parsed()) {
      SyntheticParams p = params_arg == "default" ? SyntheticParams::defaults() : parse_params(io::read_file(params_arg));
      CampaignSpec c = (campaign_arg == "dense" || campaign_arg == "sparse" || campaign_arg == "coarse")
                           ? CampaignSpec::preset(campaign_arg)
                           : parse_campaign(io::read_file(campaign_arg));
      if (seed) c.seed = *seed;
      if (drift) c.drift = true;
      Dataset d = run_campaign(p, c);
      save_dataset(d, out_path);
      out << "wrote " << d.records.size() << " records (campaign " << c.name << ", seed " << c.seed << ") to "
          << out_path << "\n";
    } else if (val->parsed()) {
      auto report = format_report(validate_dataset(load_dataset(data_dir)));
      out << report;
      if (!out_path.empty()) io::write_file_atomic(out_path, report);
    } else if (bld->parsed()) {
      auto m = CapacityMap::build(load_dataset(data_dir));
      save_archive(m, out_path);
      const auto& g = m.grid();
      out << "map with " << g.node_count() << " nodes, " << g.active_stages().size() << " varying axes, "
          << g.valid_cell_count() << " valid and " << g.invalid_cell_count() << " invalid cells written to "
          << out_path << "\n";
    } else if (qry->parsed()) {
      auto q = qflags.resolve();
      auto m = load_archive(map_path);
      auto r = m.query(q);
      out << "query (" << containment_name(r.containment) << "):\n" << format_loads(q) << "state:\n"
          << format_state(r.state, true);
      if (!out_path.empty()) {
        nlohmann::ordered_json j;
        j["loads_W"] = loads_json(q);
        j["containment"] = containment_name(r.containment);
        j["state"] = state_json(r.state);
        io::write_file_atomic(out_path, j.dump(2) + "\n");
      }
    } else if (slc->parsed()) {
      SliceSpec spec;
      spec.x = stage_arg(x_arg);
      spec.y = stage_arg(y_arg);
      spec.field = field_arg(field_text);
      spec.fixed = sflags.resolve();
      auto m = load_archive(map_path);
      auto t = slice(m, spec);
      std::string title = std::string(field_name(spec.field)) + " over " + std::string(stage_name(spec.x)) +
                          " x " + std::string(stage_name(spec.y));
      io::write_file_atomic(out_path, has_extension(out_path, ".svg") ? heatmap_svg(t, title) : slice_to_csv(t));
      if (!csv_path.empty()) io::write_file_atomic(csv_path, slice_to_csv(t));
      out << "slice " << t.xs.size() << " x " << t.ys.size() << " with " << t.gap_count() << " gaps written to "
          << out_path << "\n";
    } else if (fit->parsed()) {
      auto d = load_dataset(data_dir);
      auto cm = fit_coupling(d, fraction);
      auto res = residuals(cm, d);
      std::ostringstream table;
      write_residual_table(res, table);
      io::write_file_atomic(out_path, table.str());
      out << "coupling matrix A (K/W), rows respond, columns loaded:\n" << std::setprecision(6);
      out << "        ";
      for (StageId s : kStages) out << std::setw(13) << stage_name(s);
      out << "\n";
      for (StageId i : kStages) {
        out << std::setw(8) << stage_name(i);
        for (StageId j : kStages) out << std::setw(13) << cm(i, j);
        out << "\n";
      }
      out << "max |residual| per stage (%):";
      for (StageId s : kStages) out << " " << stage_name(s) << "=" << res.max_abs_pct[index(s)];
      out << "\n";
    } else if (pay->parsed()) {
      if (infer && observed_path.empty()) throw UsageError("--infer needs --observed");
      auto lib = load_library(library_dir.empty() ? default_data_dir() : fs::path(library_dir));
      auto spec = load_payload(spec_path, lib);
      auto m = load_archive(temps_from);
      auto lim = limits_arg(limits_path);
      nlohmann::ordered_json report;
      report["payload"] = spec.name;
      std::ostringstream summary;
      if (equilibrium) {
        EquilibriumOptions opts;
        opts.damping = alpha;
        opts.temperature_tolerance = opts.load_tolerance = tol;
        opts.max_iterations = max_iter;
        opts.ambient_K = ambient;
        auto r = solve_equilibrium(m, spec, opts);
        report = nlohmann::ordered_json::parse(equilibrium_report(r, opts));
        auto violations = check_limits(r.state, lim);
        auto vj = nlohmann::ordered_json::array();
        for (const auto& v : violations) vj.push_back(v.describe());
        report["limit_violations"] = vj;
        summary << (r.converged ? "converged" : "NOT converged") << " after " << r.iterations
                << " iterations\nloads:\n"
                << format_loads(r.q) << "state:\n"
                << format_state(r.state, true);
        for (const auto& v : violations) summary << "limit violated: " << v.describe() << "\n";
        io::write_file_atomic(out_path, report.dump(2) + "\n");
        out << summary.str();
        return r.converged ? 0 : 3;
      }
      if (infer) {
        auto obs = read_observed(observed_path);
        auto estimated = aggregate_loads(spec, obs, ambient);
        auto r = infer_load(m, obs, {}, starts);
        report["estimated_loads_W"] = loads_json(estimated);
        report["inference"] = infer_json(r);
        summary << "estimated payload loads at the observed temperatures:\n"
                << format_loads(estimated) << format_infer(r);
      } else {
        auto base = m.query(LoadVector{}).state;
        auto loads = aggregate_loads(spec, temperature_map(base), ambient);
        nlohmann::ordered_json temps;
        for (StageId s : kStages) temps[std::string(stage_name(s))] = base.temperature(s);
        report["base_temperatures_K"] = temps;
        report["loads_W"] = loads_json(loads);
        summary << "payload loads at the base temperatures:\n" << format_loads(loads);
      }
      io::write_file_atomic(out_path, report.dump(2) + "\n");
      out << summary.str();
    } else if (inf->parsed()) {
      auto obs = read_observed(observed_path);
      auto m = load_archive(map_path);
      auto r = infer_load(m, obs, {}, starts);
      io::write_file_atomic(out_path, infer_json(r).dump(2) + "\n");
      out << format_infer(r);
    } else if (hdr->parsed()) {
      auto stage = stage_arg(stage_text);
      auto fixed = hflags.resolve();
      auto lim = limits_arg(limits_path);
      auto m = load_archive(map_path);
      auto r = max_stage_power(m, stage, fixed, lim);
      io::write_file_atomic(out_path, headroom_report_text(r));
      out << "admissible " << stage_name(stage) << " power: " << r.admissible_max_W << " W (binding "
          << r.binding << ", next node +" << r.grid_step_W << " W)\n";
      for (const auto& n : r.notes) out << "note: " << n << "\n";
      if (surf_x.empty() != surf_y.empty()) throw UsageError("--surface-x and --surface-y go together");
      if (!svg_path.empty() && surf_x.empty()) throw UsageError("--svg needs --surface-x and --surface-y");
      if (!surf_x.empty()) {
        auto sx = stage_arg(surf_x), sy = stage_arg(surf_y);
        auto t = headroom_surface(m, sx, sy, fixed, lim);
        fs::path csv = fs::path(out_path).replace_extension(".surface.csv");
        io::write_file_atomic(csv, headroom_to_csv(t));
        if (!svg_path.empty()) {
          io::write_file_atomic(svg_path, admissibility_svg(t, "admissible " + std::string(stage_name(sx)) +
                                                                  " x " + std::string(stage_name(sy))));
        }
        out << "admissibility surface written to " << csv.string() << "\n";
      }
    } else if (dif->parsed()) {
      auto a = load_archive(map_path);
      auto b = load_archive(map_b);
      auto d = diff_maps(a, b);
      io::write_file_atomic(out_path, diff_to_csv(d));
      out << d.nodes.size() << " shared nodes; mean change per field (%):\n" << std::setprecision(4);
      for (Field f : kFields) {
        if (d.field_present[index(f)]) {
          out << "  " << field_name(f) << ": mean " << d.mean_pct[index(f)] << ", max |" << d.max_abs_pct[index(f)]
              << "|\n";
        }
      }
    }
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const Error& e) {
    err << "error [" << error_code_name(e.code()) << "]: " << e.what() << "\n";
    return e.kind() == ErrorKind::Domain ? 3 : 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace cryomap::cli
