#pragma once

#include <string>
#include <vector>

#include "embedlayout/graph.hpp"
#include "embedlayout/layout.hpp"

namespace embedlayout {

struct RenderStyle {
  double canvas = 400.0;  ///< square canvas side, pixels
  double node_radius = 4.0;
  double stroke_width = 1.0;
  double margin = 20.0;
  bool labels = false;
  double caption_height = 24.0;  ///< extra strip below each grid cell

  /// Throws std::invalid_argument unless every size is positive and
  /// margin < canvas / 2.
  void validate() const;
};

/// The drawing of one graph as an SVG <g> element in canvas coordinates.
/// The layout is mapped with a uniform scale and a translation into
/// [margin, canvas - margin]^2, centred, y axis pointing up. A layout with
/// all nodes coincident is drawn at the canvas centre.
std::string render_graph_group(const Graph& g, const Layout& x, const RenderStyle& style);

/// Standalone SVG document: one <line> per edge, one <circle> per node.
std::string render_svg(const Graph& g, const Layout& x, const RenderStyle& style);

struct GridItem {
  Graph graph;
  Layout layout;
  std::string caption;
};

/// Row-major grid of drawings, each with its caption underneath. Cell (r, c)
/// has its origin at (c * canvas, r * (canvas + caption_height)).
std::string render_grid(const std::vector<GridItem>& items, std::size_t columns,
                        const RenderStyle& style);

}  // namespace embedlayout
