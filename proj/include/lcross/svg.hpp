#pragma once

// Minimal self-contained SVG charts: line/point/bar layers on linear axes, plus the
// two-disk stereographic scatter used for crossing sets.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "lcross/error.hpp"

namespace lcross::svg {

inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

inline std::string escape(const std::string& s) {
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

inline const char* palette(std::size_t i) {
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf", "#8c564b"};
  return colors[i % 7];
}

/// Maps |Y| in [0,1] to a blue-to-red ramp.
inline std::string ramp(double t) {
  t = std::clamp(t, 0.0, 1.0);
  const int r = static_cast<int>(40 + 200 * t), b = static_cast<int>(220 - 180 * t);
  char buf[16];
  std::snprintf(buf, sizeof buf, "#%02x40%02x", r, b);
  return buf;
}

struct Series {
  std::string label;
  std::vector<double> x, y, err;
  enum Style { Line, Points, Bars } style = Line;
  bool dashed = false;
};

class Chart {
 public:
  Chart(std::string title, std::string xlabel, std::string ylabel)
      : title_(std::move(title)), xlabel_(std::move(xlabel)), ylabel_(std::move(ylabel)) {}

  Chart& add(Series s) {
    series_.push_back(std::move(s));
    return *this;
  }
  Chart& x_range(double lo, double hi) {
    x0_ = lo, x1_ = hi, fixed_x_ = true;
    return *this;
  }
  Chart& y_range(double lo, double hi) {
    y0_ = lo, y1_ = hi, fixed_y_ = true;
    return *this;
  }

  std::string render() const {
    double x0 = x0_, x1 = x1_, y0 = y0_, y1 = y1_;
    if (!fixed_x_ || !fixed_y_) {
      double ax = std::numeric_limits<double>::infinity(), bx = -ax, ay = ax, by = -ax;
      for (const auto& s : series_)
        for (std::size_t i = 0; i < s.x.size(); ++i) {
          if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
          const double e = i < s.err.size() ? s.err[i] : 0.0;
          ax = std::min(ax, s.x[i]), bx = std::max(bx, s.x[i]);
          ay = std::min(ay, s.y[i] - e), by = std::max(by, s.y[i] + e);
          if (s.style == Series::Bars) ay = std::min(ay, 0.0);
        }
      if (!std::isfinite(ax)) ax = 0, bx = 1, ay = 0, by = 1;
      if (bx == ax) bx = ax + 1;
      if (by == ay) by = ay + 1;
      const double pad = 0.05 * (by - ay);
      if (!fixed_x_) x0 = ax, x1 = bx;
      if (!fixed_y_) y0 = ay - pad, y1 = by + pad;
    }
    const double l = 70, r = 20, t = 40, b = 50, w = 640, h = 420;
    auto px = [&](double x) { return l + (x - x0) / (x1 - x0) * (w - l - r); };
    auto py = [&](double y) { return h - b - (y - y0) / (y1 - y0) * (h - t - b); };
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
       << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    os << "<text x=\"" << w / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title_)
       << "</text>\n";
    os << "<rect x=\"" << l << "\" y=\"" << t << "\" width=\"" << w - l - r << "\" height=\"" << h - t - b
       << "\" fill=\"none\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 4; ++k) {
      const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
      os << "<text x=\"" << px(xv) << "\" y=\"" << h - b + 16 << "\" text-anchor=\"middle\">" << num(xv)
         << "</text>\n";
      os << "<text x=\"" << l - 6 << "\" y=\"" << py(yv) + 4 << "\" text-anchor=\"end\">" << num(yv) << "</text>\n";
    }
    os << "<text x=\"" << (l + w - r) / 2 << "\" y=\"" << h - 12 << "\" text-anchor=\"middle\">" << escape(xlabel_)
       << "</text>\n";
    os << "<text x=\"16\" y=\"" << (t + h - b) / 2 << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
       << (t + h - b) / 2 << ")\">" << escape(ylabel_) << "</text>\n";
    for (std::size_t si = 0; si < series_.size(); ++si) {
      const auto& s = series_[si];
      const char* c = palette(si);
      if (s.style == Series::Line) {
        os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\""
           << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i)
          if (std::isfinite(s.y[i])) os << px(s.x[i]) << ',' << py(s.y[i]) << ' ';
        os << "\"/>\n";
      } else if (s.style == Series::Bars) {
        const double bw = s.x.size() > 1 ? (s.x[1] - s.x[0]) : (x1 - x0);
        for (std::size_t i = 0; i < s.x.size(); ++i)
          os << "<rect x=\"" << px(s.x[i] - bw / 2) << "\" y=\"" << py(std::max(s.y[i], 0.0)) << "\" width=\""
             << px(s.x[i] + bw / 2) - px(s.x[i] - bw / 2) << "\" height=\""
             << std::abs(py(0.0) - py(s.y[i])) << "\" fill=\"" << c << "\" fill-opacity=\"0.5\"/>\n";
      } else {
        for (std::size_t i = 0; i < s.x.size(); ++i)
          os << "<circle cx=\"" << px(s.x[i]) << "\" cy=\"" << py(s.y[i]) << "\" r=\"3\" fill=\"" << c << "\"/>\n";
      }
      for (std::size_t i = 0; i < s.err.size() && i < s.x.size(); ++i)
        os << "<line x1=\"" << px(s.x[i]) << "\" x2=\"" << px(s.x[i]) << "\" y1=\"" << py(s.y[i] - s.err[i])
           << "\" y2=\"" << py(s.y[i] + s.err[i]) << "\" stroke=\"" << c << "\"/>\n";
      os << "<text x=\"" << l + 10 << "\" y=\"" << t + 16 + 14 * si << "\" fill=\"" << c << "\">" << escape(s.label)
         << "</text>\n";
    }
    os << "</svg>\n";
    return os.str();
  }

 private:
  std::string title_, xlabel_, ylabel_;
  std::vector<Series> series_;
  double x0_ = 0, x1_ = 1, y0_ = 0, y1_ = 1;
  bool fixed_x_ = false, fixed_y_ = false;
};

/// Sphere points shown as two disks: the southern hemisphere (z <= 0) projected from the
/// north pole and the northern one from the south pole. Points are colored by |y|.
inline std::string sphere_scatter(const std::string& title, const std::vector<double>& xs,
                                  const std::vector<double>& ys, const std::vector<double>& zs) {
  const double rad = 180, cy = 230, cx0 = 210, cx1 = 630;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"840\" height=\"450\" font-family=\"sans-serif\" "
        "font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"420\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(title) << "</text>\n";
  for (double cx : {cx0, cx1})
    os << "<circle cx=\"" << cx << "\" cy=\"" << cy << "\" r=\"" << rad << "\" fill=\"none\" stroke=\"black\"/>\n";
  os << "<text x=\"" << cx0 << "\" y=\"440\" text-anchor=\"middle\">z &lt;= 0 (|lambda| &lt;= 1)</text>\n";
  os << "<text x=\"" << cx1 << "\" y=\"440\" text-anchor=\"middle\">z &gt; 0 (|lambda| &gt; 1)</text>\n";
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const bool south = zs[i] <= 0.0;
    const double d = south ? 1.0 - zs[i] : 1.0 + zs[i];
    const double u = xs[i] / d, v = ys[i] / d;
    os << "<circle cx=\"" << (south ? cx0 : cx1) + rad * u << "\" cy=\"" << cy - rad * v
       << "\" r=\"1.2\" fill=\"" << ramp(std::abs(ys[i])) << "\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f << content;
  if (!f) throw IoError("write failed for " + path);
}

}  // namespace lcross::svg
