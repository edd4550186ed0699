#include "smlpde/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "smlpde/errors.hpp"

namespace smlpde {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else if (c == '&') out += "&amp;";
    else out += c;
  }
  return out;
}

const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

}  // namespace

void write_line_chart(const std::string& path, const std::string& title, const std::string& x_label,
                      const std::vector<double>& x, const std::vector<Series>& series, bool log_y) {
  const double W = 640, H = 400, left = 70, right = 160, top = 40, bottom = 50;
  const double pw = W - left - right, ph = H - top - bottom;

  auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
  auto usable = [&](double v) { return std::isfinite(v) && (!log_y || v > 0.0); };

  double xmin = std::numeric_limits<double>::infinity(), xmax = -xmin;
  for (double v : x) {
    xmin = std::min(xmin, v);
    xmax = std::max(xmax, v);
  }
  double ymin = std::numeric_limits<double>::infinity(), ymax = -ymin;
  for (const Series& s : series)
    for (double v : s.y)
      if (usable(v)) {
        ymin = std::min(ymin, ty(v));
        ymax = std::max(ymax, ty(v));
      }
  if (!std::isfinite(xmin)) xmin = 0, xmax = 1;
  if (!std::isfinite(ymin)) ymin = 0, ymax = 1;
  if (xmax == xmin) xmax = xmin + 1;
  if (ymax == ymin) ymax = ymin + 1, ymin -= 1;
  const double pad = 0.05 * (ymax - ymin);
  ymin -= pad;
  ymax += pad;

  auto px = [&](double v) { return left + (v - xmin) / (xmax - xmin) * pw; };
  auto py = [&](double v) { return top + (ymax - ty(v)) / (ymax - ymin) * ph; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << num(left + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << escape(title) << "</text>\n";
  os << "<line x1=\"" << num(left) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(left + pw)
     << "\" y2=\"" << num(top + ph) << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << num(left) << "\" y1=\"" << num(top) << "\" x2=\"" << num(left) << "\" y2=\""
     << num(top + ph) << "\" stroke=\"black\"/>\n";

  for (double v : x) {
    os << "<line x1=\"" << num(px(v)) << "\" y1=\"" << num(top + ph) << "\" x2=\"" << num(px(v))
       << "\" y2=\"" << num(top + ph + 5) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(px(v)) << "\" y=\"" << num(top + ph + 18) << "\" text-anchor=\"middle\">"
       << label(v) << "</text>\n";
  }
  for (int i = 0; i <= 4; ++i) {
    const double t = ymin + (ymax - ymin) * i / 4.0;
    const double yy = top + (ymax - t) / (ymax - ymin) * ph;
    os << "<line x1=\"" << num(left - 5) << "\" y1=\"" << num(yy) << "\" x2=\"" << num(left)
       << "\" y2=\"" << num(yy) << "\" stroke=\"black\"/>\n";
    os << "<text x=\"" << num(left - 8) << "\" y=\"" << num(yy + 4) << "\" text-anchor=\"end\">"
       << label(log_y ? std::pow(10.0, t) : t) << "</text>\n";
  }
  os << "<text x=\"" << num(left + pw / 2) << "\" y=\"" << num(H - 10) << "\" text-anchor=\"middle\">"
     << escape(x_label) << "</text>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const Series& s = series[k];
    const char* color = kColors[k % (sizeof kColors / sizeof kColors[0])];
    std::string pts;
    auto flush = [&] {
      if (!pts.empty())
        os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"" << pts
           << "\"/>\n";
      pts.clear();
    };
    for (std::size_t i = 0; i < std::min(s.y.size(), x.size()); ++i) {
      if (!usable(s.y[i])) {
        flush();
        continue;
      }
      pts += (pts.empty() ? "" : " ") + num(px(x[i])) + "," + num(py(s.y[i]));
      os << "<circle cx=\"" << num(px(x[i])) << "\" cy=\"" << num(py(s.y[i])) << "\" r=\"3\" fill=\""
         << color << "\"/>\n";
    }
    flush();
    const double ly = top + 10 + 18 * static_cast<double>(k);
    os << "<line x1=\"" << num(left + pw + 15) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(left + pw + 35)
       << "\" y2=\"" << num(ly) << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << num(left + pw + 40) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.name)
       << "</text>\n";
  }
  os << "</svg>\n";

  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write '" + path + "'");
  out << os.str();
}

}  // namespace smlpde
