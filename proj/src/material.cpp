#include "cryomap/material.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cryomap/error.hpp"
#include "cryomap/table_io.hpp"

namespace cryomap {

namespace {

constexpr int kMaxDoublings = 24;
constexpr double kRelTol = 1e-9;

// Composite Simpson on [a, b] with successive doubling; the converged sum
// gets one Richardson step.
template <class F>
double adaptive_simpson(F&& g, double a, double b) {
  const double fa = g(a), fb = g(b);
  std::size_t n = 2;
  double h = (b - a) / 2.0;
  double ends = fa + fb;
  double odd = g(a + h);
  double even = 0.0;
  double s_prev = h / 3.0 * (ends + 4.0 * odd);
  for (int level = 1; level <= kMaxDoublings; ++level) {
    even += odd;
    n *= 2;
    h /= 2.0;
    odd = 0.0;
    for (std::size_t i = 1; i < n; i += 2) odd += g(a + static_cast<double>(i) * h);
    double s = h / 3.0 * (ends + 4.0 * odd + 2.0 * even);
    double scale = std::max(std::abs(s), std::abs(s_prev));
    if (std::abs(s - s_prev) <= kRelTol * scale || scale == 0.0) return s + (s - s_prev) / 15.0;
    s_prev = s;
  }
  throw Error(ErrorCode::SolveFailure, "conduction integral did not converge");
}

}  // namespace

const char* curve_source_name(CurveSource s) {
  return s == CurveSource::Manufacturer ? "MANUFACTURER" : "MATERIAL_REFERENCE";
}

void MaterialCurve::validate() const {
  if (T.size() != k.size() || T.size() < 2) {
    throw Error(ErrorCode::BadDocument, "material curve '" + name + "' needs at least two points");
  }
  for (std::size_t i = 0; i < T.size(); ++i) {
    if (!(std::isfinite(T[i]) && T[i] > 0.0 && std::isfinite(k[i]) && k[i] >= 0.0)) {
      throw Error(ErrorCode::BadDocument, "material curve '" + name + "' has an invalid point");
    }
    if (i > 0 && !(T[i] > T[i - 1])) {
      throw Error(ErrorCode::BadDocument, "material curve '" + name + "' temperatures not increasing");
    }
  }
}

double conductivity(const MaterialCurve& c, double T) {
  if (!(T > 0.0)) throw Error(ErrorCode::InvalidArgument, "conductivity needs T > 0");
  if (T > c.t_max()) {
    throw Error(ErrorCode::OutOfDomain, "T = " + io::format_double(T) + " K is above the '" + c.name +
                                            "' table maximum of " + io::format_double(c.t_max()) + " K");
  }
  if (T < c.T[0]) {
    double slope = (c.k[1] - c.k[0]) / (c.T[1] - c.T[0]);
    return std::max(0.0, c.k[0] + slope * (T - c.T[0]));
  }
  auto it = std::lower_bound(c.T.begin(), c.T.end(), T);
  std::size_t j = static_cast<std::size_t>(it - c.T.begin());
  if (c.T[j] == T) return c.k[j];
  const double t0 = c.T[j - 1], t1 = c.T[j], k0 = c.k[j - 1], k1 = c.k[j];
  if (k0 <= 0.0 || k1 <= 0.0) return k0 + (k1 - k0) * (T - t0) / (t1 - t0);
  double p = std::log(k1 / k0) / std::log(t1 / t0);
  return k0 * std::pow(T / t0, p);
}

double conductivity_integral(const MaterialCurve& c, double T_lo, double T_hi) {
  if (!(T_lo > 0.0 && T_hi > T_lo)) {
    throw Error(ErrorCode::InvalidArgument, "conduction integral needs T_H > T_C > 0");
  }
  if (T_hi > c.t_max()) conductivity(c, T_hi);  // reports the domain error

  std::vector<double> cuts{T_lo, T_hi};
  for (double t : c.T) {
    if (t > T_lo && t < T_hi) cuts.push_back(t);
  }
  const double slope = (c.k[1] - c.k[0]) / (c.T[1] - c.T[0]);
  const double t_zero = slope > 0.0 ? c.T[0] - c.k[0] / slope : 0.0;
  if (t_zero > T_lo && t_zero < std::min(T_hi, c.T[0])) cuts.push_back(t_zero);
  std::sort(cuts.begin(), cuts.end());

  double total = 0.0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (b <= c.T[0]) {
      // Below the table the floored line is either zero or the bare line
      // on each piece.
      if (b <= t_zero) continue;
      total += adaptive_simpson([&](double t) { return c.k[0] + slope * (t - c.T[0]); }, a, b);
    } else {
      total += adaptive_simpson(
          [&](double u) {
            double t = std::exp(u);
            return conductivity(c, std::min(t, c.t_max())) * t;
          },
          std::log(a), std::log(b));
    }
  }
  return total;
}

double conduction_load(const ConductorLink& link, double T_H, double T_C) {
  if (!link.material) throw Error(ErrorCode::InvalidArgument, "conductor link has no material");
  if (!(link.area_m2 > 0.0 && link.length_m > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "conductor link area and length must be positive");
  }
  return link.area_m2 / link.length_m * conductivity_integral(*link.material, T_C, T_H);
}

MaterialCurve parse_material_curve(const std::string& text, const std::string& fallback_name) {
  std::istringstream in(text);
  auto doc = io::read_delimited(in);
  MaterialCurve c;
  c.name = fallback_name;
  for (const auto& line : doc.comments) {
    auto colon = line.find(':');
    if (colon == std::string::npos) continue;
    std::string key(io::trim(std::string_view(line).substr(0, colon)));
    std::string value(io::trim(std::string_view(line).substr(colon + 1)));
    if (key == "name") {
      c.name = value;
    } else if (key == "source") {
      if (value == "MANUFACTURER") {
        c.source = CurveSource::Manufacturer;
      } else if (value == "MATERIAL_REFERENCE") {
        c.source = CurveSource::MaterialReference;
      } else {
        throw Error(ErrorCode::BadDocument, "unknown curve source '" + value + "'");
      }
    } else if (key == "note") {
      c.note = c.note.empty() ? value : c.note + " " + value;
    }
  }
  if (doc.header.size() != 2 || io::trim(doc.header[0]) != "T_K" || io::trim(doc.header[1]) != "k_W_mK") {
    throw Error(ErrorCode::MissingColumn, "material curve table needs columns T_K,k_W_mK");
  }
  for (const auto& row : doc.rows) {
    if (row.size() != 2) throw Error(ErrorCode::BadDocument, "material curve row must have two fields");
    c.T.push_back(io::parse_double(row[0], "T_K"));
    c.k.push_back(io::parse_double(row[1], "k_W_mK"));
  }
  c.validate();
  return c;
}

MaterialCurve load_material_curve(const std::filesystem::path& path) {
  return parse_material_curve(io::read_file(path), path.stem().string());
}

}  // namespace cryomap
