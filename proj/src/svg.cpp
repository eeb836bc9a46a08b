#include "cryomap/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

namespace cryomap {

namespace {

constexpr double kLeft = 90, kTop = 40, kPlotW = 480, kPlotH = 400, kBarW = 18;

// Viridis anchor colours, linearly blended.
std::string colour_at(double u) {
  static constexpr double stops[][3] = {{68, 1, 84},    {59, 82, 139},  {33, 145, 140},
                                        {94, 201, 98},  {253, 231, 37}};
  u = std::clamp(u, 0.0, 1.0) * 4.0;
  int i = std::min(3, static_cast<int>(u));
  double f = u - i;
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                static_cast<int>(std::lround(stops[i][0] + f * (stops[i + 1][0] - stops[i][0]))),
                static_cast<int>(std::lround(stops[i][1] + f * (stops[i + 1][1] - stops[i][1]))),
                static_cast<int>(std::lround(stops[i][2] + f * (stops[i + 1][2] - stops[i][2]))));
  return buf;
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

// One cell per axis node, evenly spaced in index space.
struct Layout {
  std::size_t nx, ny;
  double cw, ch;
  double x(std::size_t i) const { return kLeft + cw * static_cast<double>(i); }
  double y(std::size_t j) const { return kTop + kPlotH - ch * static_cast<double>(j + 1); }
};

void open_svg(std::ostringstream& s, double width, const std::string& title) {
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << kTop + kPlotH + 70
    << "\" font-family=\"sans-serif\" font-size=\"11\">\n"
    << "<defs><pattern id=\"gap\" width=\"6\" height=\"6\" patternUnits=\"userSpaceOnUse\">"
    << "<rect width=\"6\" height=\"6\" fill=\"#ffffff\"/>"
    << "<path d=\"M0,6 L6,0\" stroke=\"#999999\" stroke-width=\"1\"/></pattern></defs>\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
  if (!title.empty()) {
    s << "<text x=\"" << kLeft << "\" y=\"24\" font-size=\"14\">" << escape(title) << "</text>\n";
  }
}

void axes(std::ostringstream& s, const Layout& L, const std::vector<double>& xs,
          const std::vector<double>& ys, StageId x, StageId y) {
  for (std::size_t i = 0; i < xs.size(); ++i) {
    s << "<text x=\"" << L.x(i) + L.cw / 2 << "\" y=\"" << kTop + kPlotH + 14
      << "\" text-anchor=\"middle\">" << num(xs[i]) << "</text>\n";
  }
  for (std::size_t j = 0; j < ys.size(); ++j) {
    s << "<text x=\"" << kLeft - 4 << "\" y=\"" << L.y(j) + L.ch / 2 + 4 << "\" text-anchor=\"end\">"
      << num(ys[j]) << "</text>\n";
  }
  s << "<text x=\"" << kLeft + kPlotW / 2 << "\" y=\"" << kTop + kPlotH + 34 << "\" text-anchor=\"middle\">"
    << stage_name(x) << " power (W)</text>\n"
    << "<text transform=\"translate(20," << kTop + kPlotH / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
    << stage_name(y) << " power (W)</text>\n";
}

}  // namespace

std::string heatmap_svg(const SliceTable& t, const std::string& title) {
  Layout L{t.xs.size(), t.ys.size(), kPlotW / static_cast<double>(t.xs.size()),
           kPlotH / static_cast<double>(t.ys.size())};
  double lo = INFINITY, hi = -INFINITY;
  for (const auto& v : t.values) {
    if (v) {
      lo = std::min(lo, *v);
      hi = std::max(hi, *v);
    }
  }
  const double span = hi > lo ? hi - lo : 1.0;

  std::ostringstream s;
  open_svg(s, kLeft + kPlotW + 120, title);
  for (std::size_t j = 0; j < L.ny; ++j) {
    for (std::size_t i = 0; i < L.nx; ++i) {
      const auto& v = t.at(i, j);
      s << "<rect x=\"" << L.x(i) << "\" y=\"" << L.y(j) << "\" width=\"" << L.cw << "\" height=\"" << L.ch
        << "\" fill=\"" << (v ? colour_at((*v - lo) / span) : std::string("url(#gap)")) << "\">";
      s << "<title>" << (v ? num(*v) : std::string("gap")) << "</title></rect>\n";
    }
  }
  axes(s, L, t.xs, t.ys, t.spec.x, t.spec.y);

  const double bx = kLeft + kPlotW + 20;
  for (int k = 0; k < 50; ++k) {
    double u = (k + 0.5) / 50.0;
    s << "<rect x=\"" << bx << "\" y=\"" << kTop + kPlotH * (1 - (k + 1) / 50.0) << "\" width=\"" << kBarW
      << "\" height=\"" << kPlotH / 50.0 + 0.5 << "\" fill=\"" << colour_at(u) << "\"/>\n";
  }
  s << "<text x=\"" << bx + kBarW + 4 << "\" y=\"" << kTop + 8 << "\">" << num(hi) << "</text>\n"
    << "<text x=\"" << bx + kBarW + 4 << "\" y=\"" << kTop + kPlotH << "\">" << num(lo) << "</text>\n"
    << "<text x=\"" << bx << "\" y=\"" << kTop - 6 << "\">" << field_name(t.spec.field) << " ("
    << field_unit(t.spec.field) << ")</text>\n"
    << "<rect x=\"" << bx << "\" y=\"" << kTop + kPlotH + 20 << "\" width=\"" << kBarW
    << "\" height=\"12\" fill=\"url(#gap)\"/><text x=\"" << bx + kBarW + 4 << "\" y=\"" << kTop + kPlotH + 30
    << "\">gap</text>\n";
  s << "</svg>\n";
  return s.str();
}

std::string admissibility_svg(const AdmissibilityTable& t, const std::string& title) {
  Layout L{t.xs.size(), t.ys.size(), kPlotW / static_cast<double>(t.xs.size()),
           kPlotH / static_cast<double>(t.ys.size())};
  static const char* palette[] = {"#d62728", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
  std::map<std::string, std::string> colours{{"OK", "#2ca02c"}, {"INVALID_CELL", "url(#gap)"}};
  std::size_t next = 0;
  for (const auto& b : t.binding) {
    if (!colours.count(b)) colours[b] = palette[next++ % 6];
  }

  std::ostringstream s;
  open_svg(s, kLeft + kPlotW + 160, title);
  for (std::size_t j = 0; j < L.ny; ++j) {
    for (std::size_t i = 0; i < L.nx; ++i) {
      const auto& b = t.label(i, j);
      s << "<rect x=\"" << L.x(i) << "\" y=\"" << L.y(j) << "\" width=\"" << L.cw << "\" height=\"" << L.ch
        << "\" fill=\"" << colours[b] << "\" stroke=\"#ffffff\" stroke-width=\"0.5\"><title>" << escape(b)
        << "</title></rect>\n";
    }
  }
  axes(s, L, t.xs, t.ys, t.x, t.y);
  double ly = kTop;
  for (const auto& [label, colour] : colours) {
    if (std::find(t.binding.begin(), t.binding.end(), label) == t.binding.end()) continue;
    const double lx = kLeft + kPlotW + 20;
    s << "<rect x=\"" << lx << "\" y=\"" << ly << "\" width=\"14\" height=\"14\" fill=\"" << colour
      << "\"/><text x=\"" << lx + 20 << "\" y=\"" << ly + 11 << "\">"
      << (label == "OK" ? std::string("admissible") : escape(label)) << "</text>\n";
    ly += 20;
  }
  s << "</svg>\n";
  return s.str();
}

}  // namespace cryomap
