#include "vecadvect/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "vecadvect/errors.hpp"
#include "vecadvect/ops.hpp"

namespace vecadvect {

namespace {

std::string fmt(double v, const char* spec = "%.17g") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    out += c;
    if (c == '"') out += '"';
  }
  out += '"';
  return out;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot open for writing: " + path);
  return out;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c",
                                    "#9467bd", "#ff7f0e", "#8c564b"};
constexpr int kPaletteSize = 6;

struct Axis {
  bool log = false;
  double lo = 0.0;
  double hi = 1.0;  // in plot coordinates (log10 applied when log)

  double coord(double v) const { return log ? std::log10(v) : v; }
  bool usable(double v) const {
    return std::isfinite(v) && (!log || v > 0.0);
  }
  // Fraction of the way across the axis.
  double frac(double v) const { return (coord(v) - lo) / (hi - lo); }
};

// Round a raw interval up to 1, 2 or 5 times a power of ten.
double nice_step(double raw) {
  double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double r = raw / mag;
  if (r <= 1.0) return mag;
  if (r <= 2.0) return 2.0 * mag;
  if (r <= 5.0) return 5.0 * mag;
  return 10.0 * mag;
}

void fit_axis(Axis& ax, double lo, double hi) {
  if (lo > hi) {
    lo = ax.log ? 1.0 : 0.0;
    hi = ax.log ? 10.0 : 1.0;
  }
  double a = ax.coord(lo);
  double b = ax.coord(hi);
  const double span_floor =
      1e-9 * std::max({std::abs(a), std::abs(b), 1e-12});
  if (!(b - a > span_floor)) {
    double pad = ax.log ? 0.5 : std::max(1.0, std::abs(a) * 0.1);
    a -= pad;
    b += pad;
  } else {
    double pad = 0.05 * (b - a);
    a -= pad;
    b += pad;
  }
  ax.lo = a;
  ax.hi = b;
}

struct Tick {
  double frac;
  std::string label;
};

std::vector<Tick> make_ticks(const Axis& ax) {
  std::vector<Tick> ticks;
  if (ax.log) {
    int d0 = static_cast<int>(std::ceil(ax.lo - 1e-9));
    int d1 = static_cast<int>(std::floor(ax.hi + 1e-9));
    int stride = std::max(1, (d1 - d0) / 8 + ((d1 - d0) % 8 ? 1 : 0));
    for (int d = d0; d <= d1; d += stride) {
      double f = (d - ax.lo) / (ax.hi - ax.lo);
      ticks.push_back({f, fmt(std::pow(10.0, d), "%g")});
    }
    if (ticks.empty()) {
      double mid = 0.5 * (ax.lo + ax.hi);
      ticks.push_back({0.5, fmt(std::pow(10.0, mid), "%.3g")});
    }
    return ticks;
  }
  double step = nice_step((ax.hi - ax.lo) / 4.0);
  double t0 = std::ceil(ax.lo / step) * step;
  for (double t = t0; t <= ax.hi + 0.5 * step && ticks.size() < 16;
       t += step) {
    double v = std::abs(t) < 1e-12 * step ? 0.0 : t;
    ticks.push_back({(t - ax.lo) / (ax.hi - ax.lo), fmt(v, "%g")});
  }
  return ticks;
}

}  // namespace

Json load_json_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file: " + path);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid JSON in " + path + ": " + e.what());
  }
}

void write_json_file(const std::string& path, const Json& j) {
  auto out = open_out(path);
  out << j.dump(2) << "\n";
  if (!out) throw ConfigError("write failed: " + path);
}

void write_csv(const std::string& path, const CsvTable& table) {
  auto out = open_out(path);
  for (size_t i = 0; i < table.header.size(); ++i) {
    if (i) out << ',';
    out << csv_quote(table.header[i]);
  }
  out << '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.header.size())
      throw ConfigError("csv row width mismatch: " + path);
    for (size_t i = 0; i < row.size(); ++i) {
      if (i) out << ',';
      out << fmt(row[i]);
    }
    out << '\n';
  }
  if (!out) throw ConfigError("write failed: " + path);
}

void write_plot(const std::string& stem, const PlotSpec& spec,
                const std::vector<Series>& series) {
  for (const auto& s : series) {
    if (s.x.size() != s.y.size())
      throw ConfigError("plot series '" + s.label + "': x/y length mismatch");
    if (!s.yerr.empty() && s.yerr.size() != s.y.size())
      throw ConfigError("plot series '" + s.label + "': yerr length mismatch");
  }

  {
    auto out = open_out(stem + ".csv");
    out << "series,x,y,yerr\n";
    for (const auto& s : series)
      for (size_t i = 0; i < s.x.size(); ++i)
        out << csv_quote(s.label) << ',' << fmt(s.x[i]) << ',' << fmt(s.y[i])
            << ',' << fmt(s.yerr.empty() ? 0.0 : s.yerr[i]) << '\n';
    if (!out) throw ConfigError("write failed: " + stem + ".csv");
  }

  Axis xax, yax;
  xax.log = spec.logx;
  yax.log = spec.logy;
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (const auto& s : series)
    for (size_t i = 0; i < s.x.size(); ++i) {
      double e = s.yerr.empty() ? 0.0 : s.yerr[i];
      if (!xax.usable(s.x[i]) || !yax.usable(s.y[i])) continue;
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      double lo = s.y[i] - e, hi = s.y[i] + e;
      ylo = std::min(ylo, yax.usable(lo) ? lo : s.y[i]);
      yhi = std::max(yhi, yax.usable(hi) ? hi : s.y[i]);
    }
  fit_axis(xax, xlo, xhi);
  fit_axis(yax, ylo, yhi);

  const double w = 640, h = 440;
  const double ml = 76, mr = 18, mt = 36, mb = 52;
  const double pw = w - ml - mr, ph = h - mt - mb;
  auto px = [&](double v) { return ml + pw * xax.frac(v); };
  auto py = [&](double v) { return mt + ph * (1.0 - yax.frac(v)); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w
      << "\" height=\"" << h << "\" viewBox=\"0 0 " << w << " " << h
      << "\" font-family=\"monospace\" font-size=\"12\">\n";
  svg << "<rect width=\"" << w << "\" height=\"" << h
      << "\" fill=\"white\"/>\n";

  for (const auto& t : make_ticks(xax)) {
    double X = ml + pw * t.frac;
    svg << "<line x1=\"" << fmt(X, "%.2f") << "\" y1=\"" << mt << "\" x2=\""
        << fmt(X, "%.2f") << "\" y2=\"" << mt + ph
        << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << fmt(X, "%.2f") << "\" y=\"" << mt + ph + 18
        << "\" text-anchor=\"middle\">" << xml_escape(t.label) << "</text>\n";
  }
  for (const auto& t : make_ticks(yax)) {
    double Y = mt + ph * (1.0 - t.frac);
    svg << "<line x1=\"" << ml << "\" y1=\"" << fmt(Y, "%.2f") << "\" x2=\""
        << ml + pw << "\" y2=\"" << fmt(Y, "%.2f")
        << "\" stroke=\"#dddddd\"/>\n";
    svg << "<text x=\"" << ml - 6 << "\" y=\"" << fmt(Y + 4, "%.2f")
        << "\" text-anchor=\"end\">" << xml_escape(t.label) << "</text>\n";
  }
  svg << "<rect x=\"" << ml << "\" y=\"" << mt << "\" width=\"" << pw
      << "\" height=\"" << ph << "\" fill=\"none\" stroke=\"black\"/>\n";

  svg << "<text x=\"" << w / 2 << "\" y=\"20\" text-anchor=\"middle\" "
         "font-size=\"14\">"
      << xml_escape(spec.title) << "</text>\n";
  svg << "<text x=\"" << ml + pw / 2 << "\" y=\"" << h - 12
      << "\" text-anchor=\"middle\">" << xml_escape(spec.xlabel)
      << "</text>\n";
  svg << "<text x=\"18\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 18 " << mt + ph / 2
      << ")\">" << xml_escape(spec.ylabel) << "</text>\n";

  for (size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = kPalette[si % kPaletteSize];
    std::ostringstream pts;
    bool any = false;
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!xax.usable(s.x[i]) || !yax.usable(s.y[i])) continue;
      pts << fmt(px(s.x[i]), "%.2f") << ',' << fmt(py(s.y[i]), "%.2f") << ' ';
      any = true;
    }
    if (!any) continue;
    svg << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\""
        << color << "\" stroke-width=\"1.5\"/>\n";
    for (size_t i = 0; i < s.x.size(); ++i) {
      if (!xax.usable(s.x[i]) || !yax.usable(s.y[i])) continue;
      double X = px(s.x[i]), Y = py(s.y[i]);
      double e = s.yerr.empty() ? 0.0 : s.yerr[i];
      if (e > 0.0) {
        double ytop = yax.usable(s.y[i] + e) ? py(s.y[i] + e) : mt;
        double ybot = yax.usable(s.y[i] - e) ? py(s.y[i] - e) : mt + ph;
        svg << "<line x1=\"" << fmt(X, "%.2f") << "\" y1=\""
            << fmt(ytop, "%.2f") << "\" x2=\"" << fmt(X, "%.2f")
            << "\" y2=\"" << fmt(ybot, "%.2f") << "\" stroke=\"" << color
            << "\"/>\n";
        for (double yc : {ytop, ybot})
          svg << "<line x1=\"" << fmt(X - 3, "%.2f") << "\" y1=\""
              << fmt(yc, "%.2f") << "\" x2=\"" << fmt(X + 3, "%.2f")
              << "\" y2=\"" << fmt(yc, "%.2f") << "\" stroke=\"" << color
              << "\"/>\n";
      }
      svg << "<circle cx=\"" << fmt(X, "%.2f") << "\" cy=\"" << fmt(Y, "%.2f")
          << "\" r=\"2.5\" fill=\"" << color << "\"/>\n";
    }
  }

  size_t maxlen = 0;
  for (const auto& s : series) maxlen = std::max(maxlen, s.label.size());
  if (!series.empty() && maxlen > 0) {
    double lw = 34 + 7.3 * maxlen;
    double lh = 16.0 * series.size() + 8;
    double lx = ml + pw - lw - 6, ly = mt + 6;
    svg << "<rect x=\"" << fmt(lx, "%.2f") << "\" y=\"" << fmt(ly, "%.2f")
        << "\" width=\"" << fmt(lw, "%.2f") << "\" height=\""
        << fmt(lh, "%.2f")
        << "\" fill=\"white\" stroke=\"#888888\" opacity=\"0.9\"/>\n";
    for (size_t si = 0; si < series.size(); ++si) {
      double Y = ly + 16.0 * si + 14;
      const char* color = kPalette[si % kPaletteSize];
      svg << "<line x1=\"" << fmt(lx + 6, "%.2f") << "\" y1=\""
          << fmt(Y - 4, "%.2f") << "\" x2=\"" << fmt(lx + 26, "%.2f")
          << "\" y2=\"" << fmt(Y - 4, "%.2f") << "\" stroke=\"" << color
          << "\" stroke-width=\"1.5\"/>\n";
      svg << "<text x=\"" << fmt(lx + 30, "%.2f") << "\" y=\"" << fmt(Y, "%.2f")
          << "\">" << xml_escape(series[si].label) << "</text>\n";
    }
  }
  svg << "</svg>\n";

  auto out = open_out(stem + ".svg");
  out << svg.str();
  if (!out) throw ConfigError("write failed: " + stem + ".svg");
}

Json field_summary(const VectorField& f) {
  Json j;
  j["dim"] = f.grid.dim();
  Json sizes = Json::array(), box = Json::array();
  for (int a = 0; a < f.grid.dim(); ++a) {
    sizes.push_back(f.grid.size(a));
    box.push_back(f.grid.box(a));
  }
  j["sizes"] = sizes;
  j["box"] = box;
  j["n_components"] = f.ncomp();
  const double vol = f.grid.cell_volume();
  Json comps = Json::array();
  for (int c = 0; c < f.ncomp(); ++c) {
    const auto& d = f.comp[c];
    double lo = std::numeric_limits<double>::infinity(), hi = -lo, ss = 0.0;
    for (double v : d) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      ss += v * v;
    }
    Json cj;
    cj["min"] = d.empty() ? 0.0 : lo;
    cj["max"] = d.empty() ? 0.0 : hi;
    cj["norm_h"] = std::sqrt(ss * vol);
    comps.push_back(cj);
  }
  j["components"] = comps;
  j["norm_h"] = norm_H(f);
  j["relative_divergence"] = relative_divergence(f);
  return j;
}

}  // namespace vecadvect
