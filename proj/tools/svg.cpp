#include "svg.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

namespace wfcli {

namespace {

constexpr double kW = 640, kH = 480;
constexpr double kL = 70, kR = 90, kT = 40, kB = 55;  // margins

std::string f2(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string g4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string esc(const std::string& s) {
  std::string o;
  for (char c : s) {
    if (c == '<') o += "&lt;";
    else if (c == '>') o += "&gt;";
    else if (c == '&') o += "&amp;";
    else o += c;
  }
  return o;
}

// viridis, five stops
std::string colour(double t) {
  static const std::array<std::array<double, 3>, 5> stops{{{68, 1, 84},
                                                           {59, 82, 139},
                                                           {33, 145, 140},
                                                           {94, 201, 98},
                                                           {253, 231, 37}}};
  if (!std::isfinite(t)) return "#cccccc";
  t = std::clamp(t, 0.0, 1.0) * 4.0;
  const int i = std::min(3, static_cast<int>(t));
  const double u = t - i;
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x",
                static_cast<int>(std::lround(stops[i][0] + u * (stops[i + 1][0] - stops[i][0]))),
                static_cast<int>(std::lround(stops[i][1] + u * (stops[i + 1][1] - stops[i][1]))),
                static_cast<int>(std::lround(stops[i][2] + u * (stops[i + 1][2] - stops[i][2]))));
  return buf;
}

struct Frame {
  double x0, x1, y0, y1;
  double px(double x) const { return kL + (x - x0) / (x1 - x0) * (kW - kL - kR); }
  double py(double y) const { return kH - kB - (y - y0) / (y1 - y0) * (kH - kT - kB); }
};

void open(std::ostringstream& o, const std::string& title) {
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" viewBox=\"0 0 " << kW << ' ' << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
    << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
    << "<text x=\"" << kW / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << esc(title)
    << "</text>\n";
}

void axes(std::ostringstream& o, const Frame& f, const std::string& xl, const std::string& yl) {
  o << "<rect x=\"" << f2(kL) << "\" y=\"" << f2(kT) << "\" width=\"" << f2(kW - kL - kR)
    << "\" height=\"" << f2(kH - kT - kB) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const double x = f.x0 + (f.x1 - f.x0) * i / 4.0;
    const double y = f.y0 + (f.y1 - f.y0) * i / 4.0;
    o << "<text x=\"" << f2(f.px(x)) << "\" y=\"" << f2(kH - kB + 16)
      << "\" text-anchor=\"middle\">" << g4(x) << "</text>\n";
    o << "<text x=\"" << f2(kL - 6) << "\" y=\"" << f2(f.py(y) + 4) << "\" text-anchor=\"end\">"
      << g4(y) << "</text>\n";
  }
  o << "<text x=\"" << f2((kL + kW - kR) / 2) << "\" y=\"" << f2(kH - 12)
    << "\" text-anchor=\"middle\">" << esc(xl) << "</text>\n";
  o << "<text transform=\"translate(16 " << f2((kT + kH - kB) / 2)
    << ") rotate(-90)\" text-anchor=\"middle\">" << esc(yl) << "</text>\n";
}

void colourbar(std::ostringstream& o, double lo, double hi, const std::string& label) {
  const double x = kW - kR + 20, h = kH - kT - kB;
  for (int i = 0; i < 50; ++i) {
    o << "<rect x=\"" << f2(x) << "\" y=\"" << f2(kT + h * (49 - i) / 50.0) << "\" width=\"14\" height=\""
      << f2(h / 50.0 + 0.5) << "\" fill=\"" << colour((i + 0.5) / 50.0) << "\"/>\n";
  }
  o << "<text x=\"" << f2(x + 18) << "\" y=\"" << f2(kT + 8) << "\" font-size=\"10\">" << g4(hi)
    << "</text>\n";
  o << "<text x=\"" << f2(x + 18) << "\" y=\"" << f2(kT + h) << "\" font-size=\"10\">" << g4(lo)
    << "</text>\n";
  if (!label.empty())
    o << "<text x=\"" << f2(x) << "\" y=\"" << f2(kT - 6) << "\" font-size=\"10\">" << esc(label)
      << "</text>\n";
}

// Cell edges half way between centres.
std::vector<double> edges(const std::vector<double>& c) {
  std::vector<double> e(c.size() + 1);
  if (c.size() == 1) return {c[0] - 0.5, c[0] + 0.5};
  for (std::size_t i = 1; i < c.size(); ++i) e[i] = 0.5 * (c[i - 1] + c[i]);
  e.front() = c.front() - (e[1] - c.front());
  e.back() = c.back() + (c.back() - e[c.size() - 1]);
  return e;
}

// Marching squares on the cell centres for one level.
void contour(std::ostringstream& o, const Frame& f, const Grid2& g, double level) {
  auto lerp = [&](double a, double b, double za, double zb) {
    return a + (level - za) / (zb - za) * (b - a);
  };
  for (std::size_t j = 0; j + 1 < g.ys.size(); ++j) {
    for (std::size_t i = 0; i + 1 < g.xs.size(); ++i) {
      const double z00 = g.z[j][i], z10 = g.z[j][i + 1];
      const double z01 = g.z[j + 1][i], z11 = g.z[j + 1][i + 1];
      if (!std::isfinite(z00) || !std::isfinite(z10) || !std::isfinite(z01) || !std::isfinite(z11))
        continue;
      const double x0 = g.xs[i], x1 = g.xs[i + 1], y0 = g.ys[j], y1 = g.ys[j + 1];
      std::vector<std::pair<double, double>> cut;
      if ((z00 < level) != (z10 < level)) cut.push_back({lerp(x0, x1, z00, z10), y0});
      if ((z10 < level) != (z11 < level)) cut.push_back({x1, lerp(y0, y1, z10, z11)});
      if ((z01 < level) != (z11 < level)) cut.push_back({lerp(x0, x1, z01, z11), y1});
      if ((z00 < level) != (z01 < level)) cut.push_back({x0, lerp(y0, y1, z00, z01)});
      for (std::size_t k = 0; k + 1 < cut.size(); k += 2) {
        o << "<line x1=\"" << f2(f.px(cut[k].first)) << "\" y1=\"" << f2(f.py(cut[k].second))
          << "\" x2=\"" << f2(f.px(cut[k + 1].first)) << "\" y2=\"" << f2(f.py(cut[k + 1].second))
          << "\" stroke=\"white\" stroke-width=\"1\"/>\n";
      }
    }
  }
}

}  // namespace

std::string heatmap_svg(const Grid2& g, const std::string& title, const std::string& xlabel,
                        const std::string& ylabel, const std::vector<Marker>& markers,
                        int contour_levels) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& row : g.z)
    for (double v : row)
      if (std::isfinite(v)) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
      }
  if (!std::isfinite(lo)) lo = hi = 0;
  const double span = hi > lo ? hi - lo : 1.0;
  const auto ex = edges(g.xs), ey = edges(g.ys);
  const Frame f{ex.front(), ex.back(), ey.front(), ey.back()};
  std::ostringstream o;
  open(o, title);
  for (std::size_t j = 0; j < g.ys.size(); ++j) {
    for (std::size_t i = 0; i < g.xs.size(); ++i) {
      const double v = g.z[j][i];
      const double xa = f.px(ex[i]), xb = f.px(ex[i + 1]);
      const double ya = f.py(ey[j + 1]), yb = f.py(ey[j]);
      o << "<rect x=\"" << f2(xa) << "\" y=\"" << f2(ya) << "\" width=\"" << f2(xb - xa + 0.3)
        << "\" height=\"" << f2(yb - ya + 0.3) << "\" fill=\""
        << colour(std::isfinite(v) ? (v - lo) / span : NAN) << "\"/>\n";
    }
  }
  for (int k = 1; k <= contour_levels && hi > lo; ++k)
    contour(o, f, g, lo + span * k / (contour_levels + 1.0));
  for (const auto& m : markers) {
    o << "<circle cx=\"" << f2(f.px(m.x)) << "\" cy=\"" << f2(f.py(m.y))
      << "\" r=\"5\" fill=\"none\" stroke=\"red\" stroke-width=\"2\"/>\n";
    if (!m.label.empty())
      o << "<text x=\"" << f2(f.px(m.x) + 7) << "\" y=\"" << f2(f.py(m.y) - 7)
        << "\" fill=\"red\" font-size=\"11\">" << esc(m.label) << "</text>\n";
  }
  axes(o, f, xlabel, ylabel);
  colourbar(o, lo, hi, "");
  o << "</svg>\n";
  return o.str();
}

std::string scatter_svg(const std::vector<ScatterPoint>& pts, const std::string& title,
                        const std::string& xlabel, const std::string& ylabel, bool log_scale) {
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  double lo = x0, hi = -x0;
  auto tv = [&](double v) { return log_scale ? std::log10(std::max(v, 1e-16)) : v; };
  for (const auto& p : pts) {
    x0 = std::min(x0, p.x);
    x1 = std::max(x1, p.x);
    y0 = std::min(y0, p.y);
    y1 = std::max(y1, p.y);
    lo = std::min(lo, tv(p.value));
    hi = std::max(hi, tv(p.value));
  }
  if (pts.empty()) x0 = y0 = lo = 0, x1 = y1 = hi = 1;
  if (x1 <= x0) x1 = x0 + 1;
  if (y1 <= y0) y1 = y0 + 1;
  const double px = 0.04 * (x1 - x0), py = 0.04 * (y1 - y0);
  const Frame f{x0 - px, x1 + px, y0 - py, y1 + py};
  const double span = hi > lo ? hi - lo : 1.0;
  std::ostringstream o;
  open(o, title);
  for (const auto& p : pts) {
    o << "<circle cx=\"" << f2(f.px(p.x)) << "\" cy=\"" << f2(f.py(p.y)) << "\" r=\"4\" fill=\""
      << colour((tv(p.value) - lo) / span) << "\"/>\n";
  }
  axes(o, f, xlabel, ylabel);
  colourbar(o, lo, hi, log_scale ? "log10" : "");
  o << "</svg>\n";
  return o.str();
}

std::string layout_svg(const std::vector<Circle>& devices, double bx0, double bx1, double by0,
                       double by1, const std::string& title) {
  // equal aspect: fit the box into the plot area
  const double aw = kW - kL - kR, ah = kH - kT - kB;
  const double s = std::min(aw / (bx1 - bx0), ah / (by1 - by0));
  const double cx = 0.5 * (bx0 + bx1), cy = 0.5 * (by0 + by1);
  const Frame f{cx - 0.5 * aw / s, cx + 0.5 * aw / s, cy - 0.5 * ah / s, cy + 0.5 * ah / s};
  std::ostringstream o;
  open(o, title);
  o << "<rect x=\"" << f2(f.px(bx0)) << "\" y=\"" << f2(f.py(by1)) << "\" width=\""
    << f2((bx1 - bx0) * s) << "\" height=\"" << f2((by1 - by0) * s)
    << "\" fill=\"#eef5fb\" stroke=\"#4a7ab0\" stroke-dasharray=\"4 3\"/>\n";
  for (const auto& d : devices) {
    o << "<circle cx=\"" << f2(f.px(d.x)) << "\" cy=\"" << f2(f.py(d.y)) << "\" r=\""
      << f2(std::max(d.r * s, 1.5)) << "\" fill=\"#f28e2b\" stroke=\"black\"/>\n";
    if (!d.label.empty())
      o << "<text x=\"" << f2(f.px(d.x)) << "\" y=\"" << f2(f.py(d.y) - d.r * s - 4)
        << "\" text-anchor=\"middle\" font-size=\"11\">" << esc(d.label) << "</text>\n";
  }
  o << "<text x=\"" << f2(kL) << "\" y=\"" << f2(kH - kB + 34)
    << "\" font-size=\"11\">waves travel along +x</text>\n";
  axes(o, f, "x [m]", "y [m]");
  o << "</svg>\n";
  return o.str();
}

std::string histogram_svg(const std::vector<double>& values, int bins, const std::string& title,
                          const std::string& xlabel, double marker, const std::string& marker_label) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (std::isfinite(marker)) {
    lo = std::min(lo, marker);
    hi = std::max(hi, marker);
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (hi <= lo) hi = lo + 1;
  bins = std::max(1, bins);
  std::vector<int> count(bins, 0);
  for (double v : values) {
    int b = static_cast<int>((v - lo) / (hi - lo) * bins);
    count[std::clamp(b, 0, bins - 1)]++;
  }
  const int top = std::max(1, *std::max_element(count.begin(), count.end()));
  const Frame f{lo, hi, 0.0, top * 1.05};
  std::ostringstream o;
  open(o, title);
  for (int b = 0; b < bins; ++b) {
    const double xa = f.px(lo + (hi - lo) * b / bins), xb = f.px(lo + (hi - lo) * (b + 1) / bins);
    o << "<rect x=\"" << f2(xa) << "\" y=\"" << f2(f.py(count[b])) << "\" width=\""
      << f2(xb - xa) << "\" height=\"" << f2(f.py(0) - f.py(count[b]))
      << "\" fill=\"#4e79a7\" stroke=\"white\" stroke-width=\"0.5\"/>\n";
  }
  if (std::isfinite(marker)) {
    o << "<line x1=\"" << f2(f.px(marker)) << "\" y1=\"" << f2(kT) << "\" x2=\"" << f2(f.px(marker))
      << "\" y2=\"" << f2(kH - kB) << "\" stroke=\"red\" stroke-width=\"2\"/>\n";
    o << "<text x=\"" << f2(f.px(marker) - 4) << "\" y=\"" << f2(kT + 14)
      << "\" text-anchor=\"end\" fill=\"red\">" << esc(marker_label) << "</text>\n";
  }
  axes(o, f, xlabel, "count");
  o << "</svg>\n";
  return o.str();
}

}  // namespace wfcli
