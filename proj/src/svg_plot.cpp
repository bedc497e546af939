#include "slimshap/svg_plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "slimshap/dataset.hpp"

namespace slimshap {

namespace {

constexpr double kWidth = 860.0, kHeight = 540.0;
constexpr double kLeft = 72.0, kRight = 24.0, kTop = 48.0, kBottom = 56.0;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v, const char* spec = "%.2f") {
  char buf[64];
  std::snprintf(buf, sizeof(buf), spec, v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

struct Axis {
  double lo = 0.0, hi = 1.0;
  std::vector<double> ticks;
};

// round tick step of the form {1,2,5}*10^k giving five-ish intervals
Axis nice_axis(double lo, double hi) {
  if (!(std::isfinite(lo) && std::isfinite(hi))) { lo = 0.0; hi = 1.0; }
  if (lo > hi) std::swap(lo, hi);
  if (hi - lo < 1e-300) { lo -= 1.0; hi += 1.0; }
  const double span = hi - lo;
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  double step = mag;
  for (double m : {1.0, 2.0, 5.0, 10.0})
    if (raw <= m * mag) { step = m * mag; break; }
  Axis ax;
  ax.lo = std::floor(lo / step) * step;
  ax.hi = std::ceil(hi / step) * step;
  for (double t = ax.lo; t <= ax.hi + step * 0.5; t += step) {
    double v = std::abs(t) < step * 1e-9 ? 0.0 : t;
    ax.ticks.push_back(v);
  }
  return ax;
}

}  // namespace

std::string render_svg(const PlotSpec& spec) {
  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  double ymin = xmin, ymax = -xmin;
  for (const auto& s : spec.series)
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      xmin = std::min(xmin, s.x[i]), xmax = std::max(xmax, s.x[i]);
      ymin = std::min(ymin, s.y[i]), ymax = std::max(ymax, s.y[i]);
    }
  const Axis xa = nice_axis(xmin, xmax), ya = nice_axis(ymin, ymax);
  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double v) { return kLeft + (v - xa.lo) / (xa.hi - xa.lo) * pw; };
  auto py = [&](double v) { return kTop + ph - (v - ya.lo) / (ya.hi - ya.lo) * ph; };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << kWidth / 2 << "\" y=\"28\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"17\" font-weight=\"bold\">"
      << escape(spec.title) << "</text>\n";

  // grid + ticks
  for (double t : xa.ticks) {
    const double X = px(t);
    out << "<line x1=\"" << fmt(X) << "\" y1=\"" << fmt(kTop) << "\" x2=\"" << fmt(X)
        << "\" y2=\"" << fmt(kTop + ph) << "\" stroke=\"#e4e4e4\"/>\n"
        << "<text x=\"" << fmt(X) << "\" y=\"" << fmt(kTop + ph + 18)
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
        << fmt(t, "%g") << "</text>\n";
  }
  for (double t : ya.ticks) {
    const double Y = py(t);
    out << "<line x1=\"" << fmt(kLeft) << "\" y1=\"" << fmt(Y) << "\" x2=\"" << fmt(kLeft + pw)
        << "\" y2=\"" << fmt(Y) << "\" stroke=\"#e4e4e4\"/>\n"
        << "<text x=\"" << fmt(kLeft - 8) << "\" y=\"" << fmt(Y + 4)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\">" << fmt(t, "%g")
        << "</text>\n";
  }
  out << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\"" << ph
      << "\" fill=\"none\" stroke=\"#444\"/>\n"
      << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << escape(spec.x_label) << "</text>\n"
      << "<text x=\"18\" y=\"" << kTop + ph / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
         "transform=\"rotate(-90 18 "
      << kTop + ph / 2 << ")\">" << escape(spec.y_label) << "</text>\n";

  for (std::size_t si = 0; si < spec.series.size(); ++si) {
    const auto& s = spec.series[si];
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    if (!s.points_only) {
      std::ostringstream pts;  // break the polyline at non-finite points
      bool open = false;
      for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
        if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) {
          if (open) out << "<polyline fill=\"none\" stroke=\"" << color
                        << "\" stroke-width=\"1.8\" points=\"" << pts.str() << "\"/>\n";
          pts.str(std::string()), open = false;
          continue;
        }
        pts << fmt(px(s.x[i])) << "," << fmt(py(s.y[i])) << " ";
        open = true;
      }
      if (open) out << "<polyline fill=\"none\" stroke=\"" << color
                    << "\" stroke-width=\"1.8\" points=\"" << pts.str() << "\"/>\n";
    }
    const double r = s.points_only ? 2.2 : 3.2;
    const char* opacity = s.points_only ? " fill-opacity=\"0.55\"" : "";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      out << "<circle cx=\"" << fmt(px(s.x[i])) << "\" cy=\"" << fmt(py(s.y[i])) << "\" r=\"" << r
          << "\" fill=\"" << color << "\"" << opacity << "/>\n";
    }
  }

  // legend, top-right inside the frame
  double ly = kTop + 14;
  for (std::size_t si = 0; si < spec.series.size(); ++si) {
    const char* color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    const double lx = kLeft + pw - 150;
    out << "<rect x=\"" << fmt(lx) << "\" y=\"" << fmt(ly - 9) << "\" width=\"18\" height=\"4\" "
        << "fill=\"" << color << "\"/>\n"
        << "<text x=\"" << fmt(lx + 24) << "\" y=\"" << fmt(ly - 2)
        << "\" font-family=\"sans-serif\" font-size=\"12\">" << escape(spec.series[si].label)
        << "</text>\n";
    ly += 18;
  }
  out << "</svg>\n";
  return out.str();
}

void write_svg(const PlotSpec& spec, const std::string& path) {
  atomic_write_text(path, render_svg(spec));
}

}  // namespace slimshap
