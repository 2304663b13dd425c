#ifndef SALARY_SVG_HPP
#define SALARY_SVG_HPP

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "salary/csv.hpp"

// Minimal static plots: a scatter with an optional reference line and a
// horizontal bar chart. Output is plain SVG with no scripts or external refs.
namespace salary::svg {

namespace detail {
inline std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out.push_back(c);
    }
  }
  return out;
}
inline std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}
}  // namespace detail

enum class Reference { none, identity, zero };

inline void scatter(std::ostream& out, std::span<const double> xs, std::span<const double> ys, const std::string& title,
                    const std::string& x_label, const std::string& y_label, Reference ref = Reference::none) {
  const double width = 640, height = 480, margin = 60;
  double x0 = 0, x1 = 1, y0 = 0, y1 = 1;
  if (!xs.empty()) {
    auto [xmin, xmax] = std::minmax_element(xs.begin(), xs.end());
    auto [ymin, ymax] = std::minmax_element(ys.begin(), ys.end());
    x0 = *xmin, x1 = *xmax, y0 = *ymin, y1 = *ymax;
    if (ref == Reference::identity) x0 = y0 = std::min(x0, y0), x1 = y1 = std::max(x1, y1);
    if (ref == Reference::zero) y0 = std::min(y0, 0.0), y1 = std::max(y1, 0.0);
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y1 = y0 + 1;
  }
  auto px = [&](double v) { return margin + (v - x0) / (x1 - x0) * (width - 2 * margin); };
  auto py = [&](double v) { return height - margin - (v - y0) / (y1 - y0) * (height - 2 * margin); };

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << detail::escape(title)
      << "</text>\n"
      << "<line x1=\"" << margin << "\" y1=\"" << height - margin << "\" x2=\"" << width - margin << "\" y2=\""
      << height - margin << "\" stroke=\"black\"/>\n"
      << "<line x1=\"" << margin << "\" y1=\"" << margin << "\" x2=\"" << margin << "\" y2=\"" << height - margin
      << "\" stroke=\"black\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"" << height - 20 << "\" text-anchor=\"middle\" font-size=\"12\">"
      << detail::escape(x_label) << " [" << detail::num(x0) << ", " << detail::num(x1) << "]</text>\n"
      << "<text x=\"16\" y=\"" << height / 2 << "\" transform=\"rotate(-90 16 " << height / 2
      << ")\" text-anchor=\"middle\" font-size=\"12\">" << detail::escape(y_label) << " [" << detail::num(y0) << ", "
      << detail::num(y1) << "]</text>\n";
  if (ref == Reference::identity)
    out << "<line x1=\"" << detail::num(px(x0)) << "\" y1=\"" << detail::num(py(x0)) << "\" x2=\"" << detail::num(px(x1))
        << "\" y2=\"" << detail::num(py(x1)) << "\" stroke=\"red\"/>\n";
  if (ref == Reference::zero)
    out << "<line x1=\"" << margin << "\" y1=\"" << detail::num(py(0)) << "\" x2=\"" << width - margin << "\" y2=\""
        << detail::num(py(0)) << "\" stroke=\"red\"/>\n";
  for (std::size_t i = 0; i < xs.size(); ++i)
    out << "<circle cx=\"" << detail::num(px(xs[i])) << "\" cy=\"" << detail::num(py(ys[i]))
        << "\" r=\"2\" fill=\"steelblue\" fill-opacity=\"0.6\"/>\n";
  out << "</svg>\n";
}

inline void bars(std::ostream& out, const std::vector<std::string>& labels, std::span<const double> values,
                 const std::string& title) {
  const double width = 640, row = 18, left = 150, top = 40;
  const double height = top + row * static_cast<double>(labels.size()) + 20;
  double vmax = 0;
  for (double v : values) vmax = std::max(vmax, v);
  if (vmax <= 0) vmax = 1;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height << "\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << width / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"16\">" << detail::escape(title)
      << "</text>\n";
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double y = top + row * static_cast<double>(i);
    const double w = values[i] / vmax * (width - left - 80);
    out << "<text x=\"" << left - 6 << "\" y=\"" << y + 12 << "\" text-anchor=\"end\" font-size=\"11\">"
        << detail::escape(labels[i]) << "</text>\n"
        << "<rect x=\"" << left << "\" y=\"" << y + 2 << "\" width=\"" << detail::num(w) << "\" height=\"" << row - 4
        << "\" fill=\"steelblue\"/>\n"
        << "<text x=\"" << detail::num(left + w + 4) << "\" y=\"" << y + 12 << "\" font-size=\"10\">"
        << csv::format_number(std::round(values[i] * 1e6) / 1e6) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace salary::svg

#endif  // SALARY_SVG_HPP
