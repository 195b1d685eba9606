#include "iwm/cli/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "iwm/util/errors.hpp"

namespace iwm::cli {

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::string line_plot_svg(const std::string& title, const std::string& xlabel,
                          const std::string& ylabel, const std::vector<Series>& series,
                          int width, int height) {
  check(!series.empty(), "line_plot_svg: no series");
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& s : series) {
    check(s.xs.size() == s.mean.size(), "line_plot_svg: series '" + s.name + "' misaligned");
    check(s.lo.empty() || (s.lo.size() == s.xs.size() && s.hi.size() == s.xs.size()),
          "line_plot_svg: band of '" + s.name + "' misaligned");
    for (std::size_t i = 0; i < s.xs.size(); ++i) {
      xmin = std::min(xmin, s.xs[i]);
      xmax = std::max(xmax, s.xs[i]);
      const double lo = s.lo.empty() ? s.mean[i] : s.lo[i];
      const double hi = s.hi.empty() ? s.mean[i] : s.hi[i];
      ymin = std::min(ymin, lo);
      ymax = std::max(ymax, hi);
    }
  }
  if (xmax <= xmin) xmax = xmin + 1.0;
  if (ymax <= ymin) {
    ymax = ymin + 1.0;
    ymin -= 1.0;
  }
  const double pad_y = 0.05 * (ymax - ymin);
  ymin -= pad_y;
  ymax += pad_y;

  const double ml = 64, mr = 16, mt = 36, mb = 48;
  const double pw = width - ml - mr, ph = height - mt - mb;
  auto X = [&](double x) { return ml + pw * (x - xmin) / (xmax - xmin); };
  auto Y = [&](double y) { return mt + ph * (1.0 - (y - ymin) / (ymax - ymin)); };

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\" "
         "font-family=\"sans-serif\">"
      << title << "</text>\n";

  // axes with five ticks per side
  out << "<g stroke=\"#444\" stroke-width=\"1\" font-family=\"sans-serif\" font-size=\"10\">\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt + ph << "\" x2=\"" << ml + pw << "\" y2=\""
      << mt + ph << "\"/>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\"" << mt + ph
      << "\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    const double fx = xmin + (xmax - xmin) * t / 4.0;
    const double fy = ymin + (ymax - ymin) * t / 4.0;
    out << "<line x1=\"" << X(fx) << "\" y1=\"" << mt + ph << "\" x2=\"" << X(fx) << "\" y2=\""
        << mt + ph + 4 << "\"/>\n";
    out << "<text x=\"" << X(fx) << "\" y=\"" << mt + ph + 16
        << "\" text-anchor=\"middle\" stroke=\"none\" fill=\"#444\">" << num(fx) << "</text>\n";
    out << "<line x1=\"" << ml - 4 << "\" y1=\"" << Y(fy) << "\" x2=\"" << ml << "\" y2=\""
        << Y(fy) << "\"/>\n";
    out << "<text x=\"" << ml - 7 << "\" y=\"" << Y(fy) + 3
        << "\" text-anchor=\"end\" stroke=\"none\" fill=\"#444\">" << num(fy) << "</text>\n";
  }
  out << "<text x=\"" << ml + pw / 2 << "\" y=\"" << height - 10
      << "\" text-anchor=\"middle\" stroke=\"none\" fill=\"#444\" font-size=\"12\">" << xlabel
      << "</text>\n";
  out << "<text x=\"14\" y=\"" << mt + ph / 2
      << "\" text-anchor=\"middle\" stroke=\"none\" fill=\"#444\" font-size=\"12\" "
         "transform=\"rotate(-90 14 "
      << mt + ph / 2 << ")\">" << ylabel << "</text>\n";
  out << "</g>\n";

  for (const auto& s : series) {
    if (!s.lo.empty() && s.xs.size() > 1) {
      out << "<path d=\"M";
      for (std::size_t i = 0; i < s.xs.size(); ++i)
        out << (i ? " L" : "") << num(X(s.xs[i])) << " " << num(Y(s.hi[i]));
      for (std::size_t i = s.xs.size(); i-- > 0;)
        out << " L" << num(X(s.xs[i])) << " " << num(Y(s.lo[i]));
      out << " Z\" fill=\"" << s.color << "\" fill-opacity=\"0.18\" stroke=\"none\"/>\n";
    }
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.8\" points=\"";
    for (std::size_t i = 0; i < s.xs.size(); ++i)
      out << num(X(s.xs[i])) << "," << num(Y(s.mean[i])) << " ";
    out << "\"/>\n";
  }

  double ly = mt + 8;
  for (const auto& s : series) {
    out << "<line x1=\"" << ml + pw - 150 << "\" y1=\"" << ly << "\" x2=\"" << ml + pw - 126
        << "\" y2=\"" << ly << "\" stroke=\"" << s.color << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << ml + pw - 120 << "\" y=\"" << ly + 4
        << "\" font-size=\"11\" font-family=\"sans-serif\" fill=\"#222\">" << s.name
        << "</text>\n";
    ly += 16;
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace iwm::cli
