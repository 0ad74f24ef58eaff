#include "embedlayout/render.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "io_util.hpp"

namespace embedlayout {

void RenderStyle::validate() const {
  if (!(canvas > 0 && node_radius > 0 && stroke_width > 0 && margin > 0 && caption_height > 0)) {
    throw std::invalid_argument("render style sizes must be positive");
  }
  if (!(margin < canvas / 2)) throw std::invalid_argument("render margin must be below half the canvas");
}

namespace {

// Three decimals, trailing zeros dropped: "12.5", "400".
std::string num(double v) {
  std::string s = detail::format_fixed(v, 3);
  if (s.find('.') != std::string::npos) {
    s.erase(s.find_last_not_of('0') + 1);
    if (s.back() == '.') s.pop_back();
  }
  return s == "-0" ? "0" : s;
}

std::string escape_xml(const std::string& s) {
  std::string out;
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

std::vector<Point> to_canvas(const Layout& x, const RenderStyle& style) {
  const double lo = style.margin;
  const double extent = style.canvas - 2 * style.margin;
  const double centre = style.canvas / 2;
  double min_x = x[0].x, max_x = x[0].x, min_y = x[0].y, max_y = x[0].y;
  for (const auto& p : x.points) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const double span = std::max(max_x - min_x, max_y - min_y);
  std::vector<Point> out(x.size(), Point{centre, centre});
  if (!(span > 0)) return out;
  const double s = extent / span;
  const double pad_x = (extent - (max_x - min_x) * s) / 2;
  const double pad_y = (extent - (max_y - min_y) * s) / 2;
  for (std::size_t i = 0; i < x.size(); ++i) {
    out[i].x = std::clamp(lo + pad_x + (x[i].x - min_x) * s, lo, lo + extent);
    out[i].y = std::clamp(lo + pad_y + (max_y - x[i].y) * s, lo, lo + extent);
  }
  return out;
}

}  // namespace

std::string render_graph_group(const Graph& g, const Layout& x, const RenderStyle& style) {
  style.validate();
  if (x.size() != g.node_count()) {
    throw std::invalid_argument("render: layout has " + std::to_string(x.size()) +
                                " nodes, graph has " + std::to_string(g.node_count()));
  }
  if (!x.all_finite()) throw std::invalid_argument("render: layout has non-finite coordinates");
  const auto pts = to_canvas(x, style);

  std::string out = "<g>\n";
  out += "<g stroke=\"#555555\" stroke-width=\"" + num(style.stroke_width) + "\">\n";
  for (const auto& [a, b] : g.edges()) {
    out += "<line x1=\"" + num(pts[a].x) + "\" y1=\"" + num(pts[a].y) + "\" x2=\"" + num(pts[b].x) +
           "\" y2=\"" + num(pts[b].y) + "\"/>\n";
  }
  out += "</g>\n";
  out += "<g fill=\"#1f77b4\" stroke=\"#ffffff\" stroke-width=\"" + num(style.stroke_width / 2) + "\">\n";
  for (const auto& p : pts) {
    out += "<circle cx=\"" + num(p.x) + "\" cy=\"" + num(p.y) + "\" r=\"" + num(style.node_radius) + "\"/>\n";
  }
  out += "</g>\n";
  if (style.labels) {
    out += "<g font-family=\"sans-serif\" font-size=\"" + num(style.node_radius * 2) +
           "\" fill=\"#000000\">\n";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      out += "<text x=\"" + num(pts[i].x + style.node_radius) + "\" y=\"" +
             num(pts[i].y - style.node_radius) + "\">" + std::to_string(i) + "</text>\n";
    }
    out += "</g>\n";
  }
  out += "</g>\n";
  return out;
}

namespace {

std::string svg_open(double width, double height) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" + num(width) +
         "\" height=\"" + num(height) + "\" viewBox=\"0 0 " + num(width) + " " + num(height) + "\">\n";
}

}  // namespace

std::string render_svg(const Graph& g, const Layout& x, const RenderStyle& style) {
  const std::string body = render_graph_group(g, x, style);
  return svg_open(style.canvas, style.canvas) + body + "</svg>\n";
}

std::string render_grid(const std::vector<GridItem>& items, std::size_t columns,
                        const RenderStyle& style) {
  if (items.empty()) throw std::invalid_argument("render_grid: no items");
  if (columns == 0) throw std::invalid_argument("render_grid: columns must be at least 1");
  style.validate();
  const std::size_t cols = columns;
  const std::size_t rows = (items.size() + cols - 1) / cols;
  const double cell_h = style.canvas + style.caption_height;
  std::string out = svg_open(static_cast<double>(cols) * style.canvas, static_cast<double>(rows) * cell_h);
  for (std::size_t k = 0; k < items.size(); ++k) {
    const double ox = static_cast<double>(k % cols) * style.canvas;
    const double oy = static_cast<double>(k / cols) * cell_h;
    out += "<g transform=\"translate(" + num(ox) + "," + num(oy) + ")\">\n";
    out += render_graph_group(items[k].graph, items[k].layout, style);
    out += "<text x=\"" + num(style.canvas / 2) + "\" y=\"" +
           num(style.canvas + style.caption_height * 0.7) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"" +
           num(style.caption_height * 0.55) + "\">" + escape_xml(items[k].caption) + "</text>\n";
    out += "</g>\n";
  }
  out += "</svg>\n";
  return out;
}

}  // namespace embedlayout
