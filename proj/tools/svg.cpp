#include "svg.hpp"

#include <cstdio>

namespace reorder::cli {

namespace {

constexpr double kCell = 24.0;
constexpr double kMargin = 12.0;

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

double cx(const Cell& c) { return kMargin + (static_cast<double>(c.col) + 0.5) * kCell; }
double cy(const Cell& c) { return kMargin + (static_cast<double>(c.row) + 0.5) * kCell; }

}  // namespace

std::string render_trajectory_svg(const GridSpec& grid, const std::vector<Cell>& points, const std::string& title) {
  const double w = 2 * kMargin + static_cast<double>(grid.width) * kCell;
  const double h = 2 * kMargin + static_cast<double>(grid.height) * kCell;
  std::string s = "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(w) + "\" height=\"" + num(h) +
                  "\" viewBox=\"0 0 " + num(w) + " " + num(h) + "\">\n";
  s += "  <title>" + title + "</title>\n";
  s += "  <rect x=\"" + num(kMargin) + "\" y=\"" + num(kMargin) + "\" width=\"" + num(w - 2 * kMargin) +
       "\" height=\"" + num(h - 2 * kMargin) + "\" fill=\"none\" stroke=\"#bbbbbb\"/>\n";
  s += "  <polyline fill=\"none\" stroke=\"#1f77b4\" stroke-width=\"2\" points=\"";
  for (std::size_t k = 0; k < points.size(); ++k) {
    if (k) s += ' ';
    s += num(cx(points[k])) + "," + num(cy(points[k]));
  }
  s += "\"/>\n";
  if (!points.empty()) {
    s += "  <circle class=\"start\" cx=\"" + num(cx(points.front())) + "\" cy=\"" + num(cy(points.front())) +
         "\" r=\"5\" fill=\"red\"/>\n";
    s += "  <circle class=\"end\" cx=\"" + num(cx(points.back())) + "\" cy=\"" + num(cy(points.back())) +
         "\" r=\"5\" fill=\"black\"/>\n";
  }
  s += "</svg>\n";
  return s;
}

}  // namespace reorder::cli
